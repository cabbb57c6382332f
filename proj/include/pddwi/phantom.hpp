#pragma once

// Synthetic DWI generation from the bi-exponential forward model. Serves
// two purposes: noiseless phantoms are exact oracles for the decomposition,
// and seeded cohorts with per-class parameter drift stand in for clinical
// data in desk-scale experiments.
//
// Noise is Rician: magnitude MR data is the modulus of a complex signal
// with independent Gaussian noise on both channels. Noise draws come from
// a counter-based stream keyed on (seed, voxel, channel), so generation is
// bit-reproducible regardless of evaluation order.

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "pddwi/clinical.hpp"
#include "pddwi/core.hpp"
#include "pddwi/decompose.hpp"
#include "pddwi/rng.hpp"

namespace pddwi {

enum class NoiseModel { none, rician };

struct Ellipsoid {
    double cz = 0.0, cy = 0.0, cx = 0.0;  // center, voxel units
    double rz = 1.0, ry = 1.0, rx = 1.0;  // radii, voxel units
    IVIMParams params;

    bool contains(std::size_t z, std::size_t y, std::size_t x) const {
        const double az = (static_cast<double>(z) - cz) / rz;
        const double ay = (static_cast<double>(y) - cy) / ry;
        const double ax = (static_cast<double>(x) - cx) / rx;
        return az * az + ay * ay + ax * ax <= 1.0;
    }
};

struct PhantomSpec {
    Dims3 dims{8, 16, 16};
    Spacing spacing{4.0, 2.0, 2.0};
    BValueSet bvalues = BValueSet::canonical();
    IVIMParams background{100.0, 0.8e-3, 0.8e-3, 0.0};
    std::vector<Ellipsoid> regions;  // empty: whole grid is the mask
    NoiseModel noise = NoiseModel::none;
    double snr = 0.0;  // required > 0 for rician
    std::uint64_t seed = 0;

    void validate() const {
        background.validate();
        for (const auto& r : regions) {
            r.params.validate();
            if (!(r.cz >= 0 && r.cz < static_cast<double>(dims.nz) && r.cy >= 0 &&
                  r.cy < static_cast<double>(dims.ny) && r.cx >= 0 &&
                  r.cx < static_cast<double>(dims.nx)))
                throw std::invalid_argument("PhantomSpec: region center outside grid");
        }
        if (noise == NoiseModel::rician && !(snr > 0.0))
            throw std::invalid_argument("PhantomSpec: rician noise requires snr > 0");
        if (!spacing.positive()) throw std::invalid_argument("PhantomSpec: spacing must be > 0");
    }
};

// Per-voxel ground truth alongside the generated study.
struct PhantomTruth {
    Volume3<double> d, d_star, f, s0;
};

struct Phantom {
    DWIStudy study;
    PhantomTruth truth;
};

inline Phantom generate_phantom(const PhantomSpec& spec, const std::string& patient_id = "phantom",
                                TimePoint tp = TimePoint::T0) {
    spec.validate();

    const Dims3 dims = spec.dims;
    const std::size_t voxels = dims.count();
    const std::size_t nb = spec.bvalues.size();

    Phantom out;
    out.study.patient_id = patient_id;
    out.study.time_point = tp;
    out.study.bvalues = spec.bvalues;
    out.study.signal = Volume4<double>(nb, dims);
    out.study.mask = Mask3(dims, spec.regions.empty() ? 1 : 0);
    out.study.spacing = spec.spacing;
    out.truth = {Volume3<double>(dims), Volume3<double>(dims), Volume3<double>(dims),
                 Volume3<double>(dims)};

    const double sigma =
        spec.noise == NoiseModel::rician ? spec.background.s0 / spec.snr : 0.0;

    for (std::size_t z = 0; z < dims.nz; ++z) {
        for (std::size_t y = 0; y < dims.ny; ++y) {
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const std::size_t v = out.study.mask.index(z, y, x);
                const IVIMParams* p = &spec.background;
                for (const auto& region : spec.regions) {
                    if (region.contains(z, y, x)) {
                        p = &region.params;
                        out.study.mask[v] = 1;
                        break;
                    }
                }
                out.truth.d[v] = p->d;
                out.truth.d_star[v] = p->d_star;
                out.truth.f[v] = p->f;
                out.truth.s0[v] = p->s0;

                const auto clean = ivim_forward(*p, spec.bvalues);
                for (std::size_t c = 0; c < nb; ++c) {
                    double s = clean[c];
                    if (spec.noise == NoiseModel::rician) {
                        auto stream = voxel_stream(spec.seed, v * nb + c);
                        const auto [g1, g2] = stream.normal_pair();
                        const double re = s + sigma * g1;
                        const double im = sigma * g2;
                        s = std::sqrt(re * re + im * im);
                    }
                    out.study.signal[c * voxels + v] = s;
                }
            }
        }
    }
    return out;
}

// Per-class multiplicative drift applied to the tumor parameters at each
// time point (index 0 = T0). Scale 1.0 everywhere means no change.
struct ClassShift {
    std::array<double, 3> f_scale{1.0, 1.0, 1.0};
    std::array<double, 3> d_scale{1.0, 1.0, 1.0};
    std::array<double, 3> radius_scale{1.0, 1.0, 1.0};
};

// Physiologic sampling ranges for per-patient baseline tumor parameters.
struct ParamRanges {
    double d_lo = 0.5e-3, d_hi = 2.5e-3;
    double dstar_lo = 10e-3, dstar_hi = 100e-3;
    double f_lo = 0.05, f_hi = 0.35;
};

struct CohortSpec {
    std::size_t n_patients = 100;
    double prevalence = 0.3;  // fraction of pCR labels
    Dims3 dims{10, 16, 16};
    Spacing spacing{4.0, 2.0, 2.0};
    BValueSet bvalues = BValueSet::canonical();
    IVIMParams background{100.0, 0.8e-3, 0.8e-3, 0.0};
    ParamRanges ranges;
    // Responders: pseudo-diffusion fraction falls and pure diffusion rises
    // over treatment. Non-responders stay at baseline. Geometry is held
    // fixed by default so the class signal is physiological, not shape;
    // radius_scale is available for experiments that want shrinkage.
    ClassShift responder{{1.0, 0.75, 0.5}, {1.0, 1.15, 1.3}, {1.0, 1.0, 1.0}};
    ClassShift non_responder{{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}};
    NoiseModel noise = NoiseModel::rician;
    double snr = 40.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_patients == 0) throw std::invalid_argument("CohortSpec: n_patients must be > 0");
        if (!(prevalence > 0.0 && prevalence < 1.0))
            throw std::invalid_argument("CohortSpec: prevalence must be in (0, 1)");
        background.validate();
        if (noise == NoiseModel::rician && !(snr > 0.0))
            throw std::invalid_argument("CohortSpec: rician noise requires snr > 0");
    }
};

struct CohortPatient {
    std::string id;
    int label = 0;  // 1 = pCR
    ClinicalRecord clinical;
    std::vector<DWIStudy> studies;  // indexed by time point
};

namespace detail {

inline ClinicalRecord sample_clinical(const std::string& id, Rng& rng, double diameter_cm) {
    static const std::vector<std::string> races{"white", "black", "asian", "other"};
    static const std::vector<std::string> lesions{"single_mass", "multiple_masses", "nonmass",
                                                  "diffuse"};
    static const std::vector<std::string> hr_her2{"HR+/HER2+", "HR+/HER2-", "HR-/HER2+",
                                                  "HR-/HER2-"};
    ClinicalRecord rec;
    rec.patient_id = id;
    rec.age = 25.0 + std::floor(rng.uniform(0.0, 51.0));
    rec.race = races[rng.below(races.size())];
    rec.lesion_type = lesions[rng.below(lesions.size())];
    rec.hr_her2 = hr_her2[rng.below(hr_her2.size())];
    if (rng.uniform01() < 0.05) {
        rec.grade = std::nullopt;  // occasional missing grade, imputed downstream
    } else {
        const auto g = rng.below(3);
        rec.grade = g == 0 ? TumorGrade::Low : g == 1 ? TumorGrade::Intermediate : TumorGrade::High;
    }
    rec.diameter_cm = diameter_cm;
    return rec;
}

}  // namespace detail

// Labeled cohort with per-class parameter drift across time points. All
// sampling flows from per-patient sub-streams of the cohort seed, so the
// cohort is bitwise reproducible and independent of generation order.
inline std::vector<CohortPatient> generate_cohort(const CohortSpec& spec) {
    spec.validate();

    const std::size_t n = spec.n_patients;
    const std::size_t n_pos =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.prevalence));

    // Stratified label assignment: exactly n_pos positives, order shuffled.
    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n_pos; ++i) labels[i] = 1;
    Rng label_rng(mix_key(spec.seed, 0x1abe15));
    label_rng.shuffle(labels);

    std::vector<CohortPatient> cohort;
    cohort.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        CohortPatient patient;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "P%04zu", i + 1);
        patient.id = buf;
        patient.label = labels[i];

        Rng rng(mix_key(spec.seed, 0xba5e, i));
        IVIMParams base;
        base.s0 = spec.background.s0 * rng.uniform(1.2, 1.6);
        base.d = rng.uniform(spec.ranges.d_lo, spec.ranges.d_hi);
        base.d_star = std::max(rng.uniform(spec.ranges.dstar_lo, spec.ranges.dstar_hi), base.d);
        base.f = rng.uniform(spec.ranges.f_lo, spec.ranges.f_hi);

        const double base_rz = rng.uniform(0.22, 0.32) * static_cast<double>(spec.dims.nz);
        const double base_ry = rng.uniform(0.22, 0.32) * static_cast<double>(spec.dims.ny);
        const double base_rx = rng.uniform(0.22, 0.32) * static_cast<double>(spec.dims.nx);

        const ClassShift& shift = patient.label ? spec.responder : spec.non_responder;

        for (std::size_t t = 0; t < kAllTimePoints.size(); ++t) {
            Ellipsoid tumor;
            tumor.cz = static_cast<double>(spec.dims.nz) / 2.0;
            tumor.cy = static_cast<double>(spec.dims.ny) / 2.0;
            tumor.cx = static_cast<double>(spec.dims.nx) / 2.0;
            tumor.rz = std::max(1.0, base_rz * shift.radius_scale[t]);
            tumor.ry = std::max(1.0, base_ry * shift.radius_scale[t]);
            tumor.rx = std::max(1.0, base_rx * shift.radius_scale[t]);
            tumor.params = base;
            tumor.params.f = std::clamp(base.f * shift.f_scale[t], 0.0, 1.0);
            tumor.params.d = base.d * shift.d_scale[t];
            tumor.params.d_star = std::max(base.d_star, tumor.params.d);

            PhantomSpec pspec;
            pspec.dims = spec.dims;
            pspec.spacing = spec.spacing;
            pspec.bvalues = spec.bvalues;
            pspec.background = spec.background;
            pspec.regions = {tumor};
            pspec.noise = spec.noise;
            pspec.snr = spec.snr;
            pspec.seed = mix_key(spec.seed, i, t);

            patient.studies.push_back(
                generate_phantom(pspec, patient.id, kAllTimePoints[t]).study);
        }

        // Longest diameter at T0 from the actual tumor extent, in cm.
        const double dia_mm = 2.0 * std::max({base_rz * spec.spacing.dz, base_ry * spec.spacing.dy,
                                              base_rx * spec.spacing.dx});
        patient.clinical = detail::sample_clinical(patient.id, rng, dia_mm / 10.0);

        cohort.push_back(std::move(patient));
    }
    return cohort;
}

}  // namespace pddwi
