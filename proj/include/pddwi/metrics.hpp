#pragma once

// Classification metrics: AUC (Mann-Whitney U with half-credit ties),
// F1 and Cohen's kappa at a fixed decision threshold, and a seeded paired
// permutation test on the AUC difference of two models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pddwi/core.hpp"
#include "pddwi/rng.hpp"

namespace pddwi {

constexpr double kDefaultThreshold = 0.5;

namespace detail {

inline void check_scored(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("metrics: score/label count mismatch");
    if (scores.empty()) throw std::invalid_argument("metrics: empty input");
    std::size_t pos = 0, neg = 0;
    for (int y : labels) (y ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw DataError("metrics: both classes must be present (pos=" + std::to_string(pos) +
                        ", neg=" + std::to_string(neg) + ")");
}

}  // namespace detail

// Rank formulation of the Mann-Whitney U statistic. Tie groups take the
// average rank, so numerator terms are exact multiples of one half and the
// result equals brute-force pair counting bit for bit.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_scored(scores, labels);
    const std::size_t n = scores.size();

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                pos_rank_sum += avg_rank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = n - pos;
    const double u = pos_rank_sum - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t n() const { return tp + fp + tn + fn; }
};

inline Confusion confusion_at(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold) {
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (pred && labels[i]) ++c.tp;
        else if (pred && !labels[i]) ++c.fp;
        else if (!pred && labels[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline double f1(const std::vector<double>& scores, const std::vector<int>& labels,
                 double threshold = kDefaultThreshold) {
    detail::check_scored(scores, labels);
    const auto c = confusion_at(scores, labels, threshold);
    const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / denom;
}

inline double cohen_kappa(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold = kDefaultThreshold) {
    detail::check_scored(scores, labels);
    const auto c = confusion_at(scores, labels, threshold);
    const double n = static_cast<double>(c.n());
    const double po = static_cast<double>(c.tp + c.tn) / n;
    const double pred_pos = static_cast<double>(c.tp + c.fp);
    const double pred_neg = static_cast<double>(c.tn + c.fn);
    const double act_pos = static_cast<double>(c.tp + c.fn);
    const double act_neg = static_cast<double>(c.tn + c.fp);
    const double pe = (pred_pos * act_pos + pred_neg * act_neg) / (n * n);
    if (pe == 1.0) return 0.0;
    return (po - pe) / (1.0 - pe);
}

struct MetricsReport {
    double auc = 0.0;
    double f1 = 0.0;
    double kappa = 0.0;
    std::size_t n = 0;
    double threshold = kDefaultThreshold;
};

inline MetricsReport evaluate_scores(const std::vector<double>& scores,
                                     const std::vector<int>& labels,
                                     double threshold = kDefaultThreshold) {
    MetricsReport r;
    r.auc = auc(scores, labels);
    r.f1 = f1(scores, labels, threshold);
    r.kappa = cohen_kappa(scores, labels, threshold);
    r.n = scores.size();
    r.threshold = threshold;
    return r;
}

// Two-sided paired permutation test on |AUC_a - AUC_b|: per-sample model
// assignments are swapped with probability 1/2 in each replicate. Uses the
// add-one estimate (1 + hits) / (1 + n_perm), so identical score vectors
// give p = 1 exactly.
inline double paired_permutation_test(const std::vector<double>& scores_a,
                                      const std::vector<double>& scores_b,
                                      const std::vector<int>& labels, std::size_t n_perm,
                                      std::uint64_t seed) {
    if (scores_a.size() != scores_b.size())
        throw std::invalid_argument("paired_permutation_test: misaligned score vectors");
    detail::check_scored(scores_a, labels);
    if (n_perm < 100)
        throw std::invalid_argument("paired_permutation_test: n_perm must be >= 100");

    const double observed = std::abs(auc(scores_a, labels) - auc(scores_b, labels));

    std::size_t hits = 0;
    std::vector<double> a(scores_a.size()), b(scores_b.size());
    for (std::size_t r = 0; r < n_perm; ++r) {
        Rng rng(mix_key(seed, 0x9e27, r));
        for (std::size_t i = 0; i < scores_a.size(); ++i) {
            const bool swap = rng.next_u64() & 1;
            a[i] = swap ? scores_b[i] : scores_a[i];
            b[i] = swap ? scores_a[i] : scores_b[i];
        }
        if (std::abs(auc(a, labels) - auc(b, labels)) >= observed) ++hits;
    }
    return static_cast<double>(1 + hits) / static_cast<double>(1 + n_perm);
}

}  // namespace pddwi
