#pragma once

// Shared fixtures for the test suites.

#include <vector>

#include "pddwi/core.hpp"
#include "pddwi/decompose.hpp"

namespace pddwi::testing {

// Study whose every voxel carries the same forward-model signal; mask
// covers the whole grid.
inline DWIStudy uniform_study(const IVIMParams& params,
                              const BValueSet& bvalues = BValueSet::canonical(),
                              Dims3 dims = {2, 3, 4}, Spacing spacing = {4.0, 2.0, 2.0}) {
    DWIStudy study;
    study.patient_id = "test";
    study.bvalues = bvalues;
    study.signal = Volume4<double>(bvalues.size(), dims);
    study.mask = Mask3(dims, 1);
    study.spacing = spacing;

    const auto signals = ivim_forward(params, bvalues);
    const std::size_t voxels = dims.count();
    for (std::size_t c = 0; c < bvalues.size(); ++c)
        for (std::size_t v = 0; v < voxels; ++v) study.signal[c * voxels + v] = signals[c];
    return study;
}

inline ParameterMap constant_map(double value, Dims3 dims = {2, 3, 4},
                                 Spacing spacing = {1.0, 1.0, 1.0}) {
    return ParameterMap{"test", Volume3<double>(dims, value), Mask3(dims, 1), spacing};
}

}  // namespace pddwi::testing
