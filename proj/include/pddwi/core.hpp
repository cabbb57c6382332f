#pragma once

// Core volumetric types shared by every stage of the pipeline: b-value
// bookkeeping, 3D/4D grids, the per-study container and derived parameter
// maps, plus the non-throwing study validator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pddwi {

// Bad or inconsistent input data (files, volumes, labels, schemas).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computation that cannot produce a finite result.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TimePoint : int { T0 = 0, T1 = 1, T2 = 2 };

constexpr std::array<TimePoint, 3> kAllTimePoints{TimePoint::T0, TimePoint::T1, TimePoint::T2};

inline std::string to_string(TimePoint tp) {
    switch (tp) {
        case TimePoint::T0: return "T0";
        case TimePoint::T1: return "T1";
        case TimePoint::T2: return "T2";
    }
    throw std::invalid_argument("unknown time point");
}

inline TimePoint parse_time_point(const std::string& s) {
    if (s == "T0") return TimePoint::T0;
    if (s == "T1") return TimePoint::T1;
    if (s == "T2") return TimePoint::T2;
    throw DataError("unknown time point '" + s + "' (expected T0, T1 or T2)");
}

// Voxel spacing in mm, slowest-varying axis first.
struct Spacing {
    double dz = 1.0;
    double dy = 1.0;
    double dx = 1.0;

    bool positive() const { return dz > 0.0 && dy > 0.0 && dx > 0.0; }
    double voxel_volume() const { return dz * dy * dx; }
    bool operator==(const Spacing&) const = default;
};

struct Dims3 {
    std::size_t nz = 0, ny = 0, nx = 0;
    std::size_t count() const { return nz * ny * nx; }
    bool operator==(const Dims3&) const = default;
};

template <typename T>
class Volume3 {
public:
    Volume3() = default;
    Volume3(Dims3 dims, T fill = T{}) : dims_(dims), data_(dims.count(), fill) {}

    const Dims3& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }

    T& at(std::size_t z, std::size_t y, std::size_t x) { return data_[index(z, y, x)]; }
    const T& at(std::size_t z, std::size_t y, std::size_t x) const { return data_[index(z, y, x)]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(std::size_t z, std::size_t y, std::size_t x) const {
        return (z * dims_.ny + y) * dims_.nx + x;
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Volume3&) const = default;

private:
    Dims3 dims_{};
    std::vector<T> data_;
};

// Channel-major 4D grid; channel c is a contiguous 3D block.
template <typename T>
class Volume4 {
public:
    Volume4() = default;
    Volume4(std::size_t channels, Dims3 dims, T fill = T{})
        : channels_(channels), dims_(dims), data_(channels * dims.count(), fill) {}

    std::size_t channels() const { return channels_; }
    const Dims3& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }

    T& at(std::size_t c, std::size_t z, std::size_t y, std::size_t x) {
        return data_[index(c, z, y, x)];
    }
    const T& at(std::size_t c, std::size_t z, std::size_t y, std::size_t x) const {
        return data_[index(c, z, y, x)];
    }

    std::size_t index(std::size_t c, std::size_t z, std::size_t y, std::size_t x) const {
        return ((c * dims_.nz + z) * dims_.ny + y) * dims_.nx + x;
    }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Volume4&) const = default;

private:
    std::size_t channels_ = 0;
    Dims3 dims_{};
    std::vector<T> data_;
};

using Mask3 = Volume3<std::uint8_t>;

inline std::size_t count_true(const Mask3& m) {
    std::size_t n = 0;
    for (auto v : m.data()) n += (v != 0);
    return n;
}

// Ordered set of diffusion weightings in s/mm^2. Construction enforces the
// structural invariants (>= 2 entries, non-negative, strictly increasing);
// compatibility with the decomposition subsets is checked by validate_study.
class BValueSet {
public:
    explicit BValueSet(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2)
            throw std::invalid_argument("BValueSet requires at least 2 b-values");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
                throw std::invalid_argument("BValueSet values must be finite and >= 0");
            if (i > 0 && !(values_[i] > values_[i - 1]))
                throw std::invalid_argument("BValueSet values must be strictly increasing");
        }
    }

    static BValueSet canonical() { return BValueSet({0.0, 100.0, 600.0, 800.0}); }

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    std::optional<std::size_t> index_of(double b) const {
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (values_[i] == b) return i;
        return std::nullopt;
    }

    // Channel indices with b <= cutoff / b >= cutoff (cutoff channel in both).
    std::vector<std::size_t> indices_leq(double cutoff) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (values_[i] <= cutoff) idx.push_back(i);
        return idx;
    }
    std::vector<std::size_t> indices_geq(double cutoff) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (values_[i] >= cutoff) idx.push_back(i);
        return idx;
    }

    bool operator==(const BValueSet&) const = default;

private:
    std::vector<double> values_;
};

// Cutoff between the pseudo-diffusion-dominated low-b regime and the
// diffusion-dominated high-b regime.
constexpr double kLowBCutoff = 100.0;

// One acquisition: 4D signal indexed (b, z, y, x), tumor mask, spacing.
struct DWIStudy {
    std::string patient_id;
    TimePoint time_point = TimePoint::T0;
    BValueSet bvalues = BValueSet::canonical();
    Volume4<double> signal;
    Mask3 mask;
    Spacing spacing;
};

// Named 3D scalar map with a validity mask. For maps derived from a study,
// valid is a subset of the study mask.
struct ParameterMap {
    std::string name;
    Volume3<double> data;
    Mask3 valid;
    Spacing spacing;
};

inline constexpr const char* kMapAdc0_100 = "ADC_0_100";
inline constexpr const char* kMapAdc100_800 = "ADC_100_800";
inline constexpr const char* kMapAdc0_800 = "ADC_0_800";
inline constexpr const char* kMapF = "F";

struct Violation {
    std::string field;
    std::string rule;
    std::string detail;
};

// Reports every broken DWIStudy invariant; never throws. An empty report
// means every downstream operation's preconditions on the study hold.
inline std::vector<Violation> validate_study(const DWIStudy& study) {
    std::vector<Violation> out;

    if (study.signal.dims() != study.mask.dims()) {
        out.push_back({"signal/mask", "dim-mismatch",
                       "signal spatial dims must equal mask dims"});
    }
    if (study.signal.channels() != study.bvalues.size()) {
        out.push_back({"signal/bvalues", "channel-count",
                       "signal channel count " + std::to_string(study.signal.channels()) +
                           " != b-value count " + std::to_string(study.bvalues.size())});
    }
    if (count_true(study.mask) == 0) {
        out.push_back({"mask", "empty-mask", "mask must contain at least one true voxel"});
    }
    if (!study.spacing.positive()) {
        out.push_back({"spacing", "non-positive", "all spacing components must be > 0"});
    }
    for (double v : study.signal.data()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            out.push_back({"signal", "non-negative", "signal values must be finite and >= 0"});
            break;
        }
    }

    // The decomposition needs b=0, a second low-b channel and two high-b
    // channels; a study missing e.g. b=100 is rejected here the same way
    // such acquisitions are excluded from analysis.
    const auto& bv = study.bvalues;
    const bool has_b0 = bv.index_of(0.0).has_value();
    const std::size_t n_low = bv.indices_leq(kLowBCutoff).size();
    const std::size_t n_high = bv.indices_geq(kLowBCutoff).size();
    if (!has_b0 || n_low < 2 || n_high < 2) {
        out.push_back({"bvalues", "bvalue-set",
                       "decomposition requires b=0, >=2 values <= 100 and >=2 values >= 100"});
    }

    return out;
}

// Throws DataError on the first violation; used by operations whose
// precondition is a valid study.
inline void require_valid_study(const DWIStudy& study) {
    const auto violations = validate_study(study);
    if (!violations.empty()) {
        throw DataError("invalid study '" + study.patient_id + "': " + violations.front().field +
                        ": " + violations.front().rule + " (" + violations.front().detail + ")");
    }
}

}  // namespace pddwi
