#pragma once

// Physiological decomposition of the DWI signal.
//
// The signal at diffusion weighting b follows a mono-exponential decay
//   s(b) = s0 * exp(-b * ADC)
// so a least-squares line through (b, ln s) yields ADC and s0. Fitting the
// line over different b-value subsets isolates different physiology:
//   ADC_0_100   b <= 100, pseudo-diffusion dominated
//   ADC_100_800 b >= 100, pseudo-diffusion free
//   ADC_0_800   all b, the conventional aggregate map
//
// The bi-exponential model
//   s(b) = s0 * (F * exp(-b (D* + D)) + (1 - F) * exp(-b D))
// cannot be fit directly from four b-values, so the pseudo-diffusion
// fraction F is recovered by a segmented linear approximation: fit the
// high-b subset, extrapolate its intercept s0' back to b=0, and take
// F = (s(0) - s0') / s(0), clamped to [0, 1].

#include <map>
#include <span>
#include <utility>

#include "pddwi/core.hpp"

namespace pddwi {

struct MonoExpFit {
    double adc = 0.0;      // mm^2/s
    double log_s0 = 0.0;   // natural log of extrapolated b=0 signal
    double residual = 0.0; // sum of squared log-domain residuals
};

struct IVIMParams {
    double s0 = 1.0;     // signal units
    double d = 0.0;      // pure diffusion coefficient D, mm^2/s
    double d_star = 0.0; // pseudo-diffusion coefficient D*, mm^2/s
    double f = 0.0;      // pseudo-diffusion fraction, in [0, 1]

    void validate() const {
        if (!(s0 > 0.0)) throw std::invalid_argument("IVIMParams: s0 must be > 0");
        if (!(d >= 0.0)) throw std::invalid_argument("IVIMParams: D must be >= 0");
        if (!(d_star >= d)) throw std::invalid_argument("IVIMParams: D* must be >= D");
        if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("IVIMParams: F must be in [0, 1]");
    }
};

// Ordinary least squares of ln(s) against b; slope = -ADC. Returns nullopt
// when any signal is non-positive (log undefined; the voxel is marked
// invalid by callers rather than aborting the volume). The two-point case
// uses the closed form ADC = ln(s_a / s_b) / (b_b - b_a) exactly.
inline std::optional<MonoExpFit> fit_monoexp(const std::vector<std::pair<double, double>>& samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("fit_monoexp: need at least 2 (b, s) pairs");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (samples[i].first == samples[j].first)
                throw std::invalid_argument("fit_monoexp: duplicate b-value");

    for (const auto& [b, s] : samples)
        if (!(s > 0.0)) return std::nullopt;

    if (n == 2) {
        const auto [b1, s1] = samples[0];
        const auto [b2, s2] = samples[1];
        const double adc = std::log(s1 / s2) / (b2 - b1);
        return MonoExpFit{adc, std::log(s1) + adc * b1, 0.0};
    }

    double b_mean = 0.0, y_mean = 0.0;
    for (const auto& [b, s] : samples) {
        b_mean += b;
        y_mean += std::log(s);
    }
    b_mean /= static_cast<double>(n);
    y_mean /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [b, s] : samples) {
        const double db = b - b_mean;
        sxx += db * db;
        sxy += db * (std::log(s) - y_mean);
    }

    const double slope = sxy / sxx;
    const double intercept = y_mean - slope * b_mean;

    double ssr = 0.0;
    for (const auto& [b, s] : samples) {
        const double r = std::log(s) - (intercept + slope * b);
        ssr += r * r;
    }
    return MonoExpFit{-slope, intercept, ssr};
}

// Evaluates the bi-exponential forward model at each b-value.
inline std::vector<double> ivim_forward(const IVIMParams& p, const BValueSet& bvalues) {
    p.validate();
    std::vector<double> out;
    out.reserve(bvalues.size());
    for (double b : bvalues.values()) {
        out.push_back(p.s0 * (p.f * std::exp(-b * (p.d_star + p.d)) +
                              (1.0 - p.f) * std::exp(-b * p.d)));
    }
    return out;
}

namespace detail {

// Shared precomputation for per-voxel OLS over a fixed channel subset.
struct SubsetFitPlan {
    std::vector<std::size_t> channels;
    std::vector<double> b;
    std::vector<double> b_centered;
    double b_mean = 0.0;
    double sxx = 0.0;

    explicit SubsetFitPlan(const BValueSet& bvalues, std::vector<std::size_t> idx)
        : channels(std::move(idx)) {
        for (auto c : channels) b.push_back(bvalues[c]);
        for (double bi : b) b_mean += bi;
        b_mean /= static_cast<double>(b.size());
        for (double bi : b) {
            b_centered.push_back(bi - b_mean);
            sxx += (bi - b_mean) * (bi - b_mean);
        }
    }

    // OLS over this subset's signals; nullopt if any signal is non-positive.
    std::optional<MonoExpFit> fit(std::span<const double> s) const {
        const std::size_t n = b.size();
        for (std::size_t i = 0; i < n; ++i)
            if (!(s[i] > 0.0)) return std::nullopt;

        if (n == 2) {
            const double adc = std::log(s[0] / s[1]) / (b[1] - b[0]);
            return MonoExpFit{adc, std::log(s[0]) + adc * b[0], 0.0};
        }

        double y_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) y_mean += std::log(s[i]);
        y_mean /= static_cast<double>(n);

        double sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) sxy += b_centered[i] * (std::log(s[i]) - y_mean);

        const double slope = sxy / sxx;
        const double intercept = y_mean - slope * b_mean;
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::log(s[i]) - (intercept + slope * b[i]);
            ssr += r * r;
        }
        return MonoExpFit{-slope, intercept, ssr};
    }
};

}  // namespace detail

// Pseudo-diffusion fraction map. Per voxel: fit the b >= 100 subset,
// extrapolate its intercept to b=0 and compare with the measured s(0).
// Invalid where s(0) <= 0 or the high-b fit is impossible.
inline ParameterMap compute_f(const DWIStudy& study) {
    require_valid_study(study);

    const auto b0 = study.bvalues.index_of(0.0);
    const detail::SubsetFitPlan plan(study.bvalues, study.bvalues.indices_geq(kLowBCutoff));

    const Dims3 dims = study.mask.dims();
    ParameterMap map{kMapF, Volume3<double>(dims), Mask3(dims), study.spacing};

    std::vector<double> s(plan.channels.size());
    const std::size_t voxels = dims.count();
    const std::size_t stride = voxels;  // contiguous channel blocks
    const auto& sig = study.signal.data();

    for (std::size_t v = 0; v < voxels; ++v) {
        const double s0 = sig[*b0 * stride + v];
        if (!(s0 > 0.0)) continue;
        for (std::size_t i = 0; i < plan.channels.size(); ++i)
            s[i] = sig[plan.channels[i] * stride + v];
        const auto fit = plan.fit(s);
        if (!fit) continue;
        const double extrapolated = std::exp(fit->log_s0);
        const double f = (s0 - extrapolated) / s0;
        map.data[v] = std::clamp(f, 0.0, 1.0);
        map.valid[v] = study.mask[v] ? 1 : 0;
    }
    return map;
}

// Full decomposition: the three ADC subset maps plus F. Data is computed
// wherever the fit is defined; valid flags are restricted to the study mask.
inline std::map<std::string, ParameterMap> decompose_study(const DWIStudy& study) {
    require_valid_study(study);

    struct SubsetSpec {
        const char* name;
        std::vector<std::size_t> channels;
    };
    const std::vector<SubsetSpec> subsets{
        {kMapAdc0_100, study.bvalues.indices_leq(kLowBCutoff)},
        {kMapAdc100_800, study.bvalues.indices_geq(kLowBCutoff)},
        {kMapAdc0_800, study.bvalues.indices_geq(0.0)},
    };
    for (const auto& sub : subsets) {
        if (sub.channels.size() < 2)
            throw DataError(std::string("decompose_study: subset ") + sub.name +
                            " has fewer than 2 b-values");
    }

    const Dims3 dims = study.mask.dims();
    const std::size_t voxels = dims.count();
    const auto& sig = study.signal.data();

    std::map<std::string, ParameterMap> out;
    for (const auto& sub : subsets) {
        const detail::SubsetFitPlan plan(study.bvalues, sub.channels);
        ParameterMap map{sub.name, Volume3<double>(dims), Mask3(dims), study.spacing};
        std::vector<double> s(plan.channels.size());
        for (std::size_t v = 0; v < voxels; ++v) {
            for (std::size_t i = 0; i < plan.channels.size(); ++i)
                s[i] = sig[plan.channels[i] * voxels + v];
            const auto fit = plan.fit(s);
            if (!fit) continue;
            map.data[v] = fit->adc;
            map.valid[v] = study.mask[v] ? 1 : 0;
        }
        out.emplace(sub.name, std::move(map));
    }
    out.emplace(kMapF, compute_f(study));
    return out;
}

}  // namespace pddwi
