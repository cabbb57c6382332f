#pragma once

// Per-patient feature matrix assembly across time points and parameter
// maps, univariate ANOVA F-scoring against the binary outcome, and top-k
// selection. Selection is fit on training rows only and applied to test
// rows as a fixed column subset.

#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pddwi/core.hpp"
#include "pddwi/feature_vector.hpp"

namespace pddwi {

class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<std::string> columns, std::vector<std::string> ids,
                  std::vector<double> values, std::vector<int> labels = {})
        : columns_(std::move(columns)),
          ids_(std::move(ids)),
          values_(std::move(values)),
          labels_(std::move(labels)) {
        validate();
    }

    std::size_t n_rows() const { return ids_.size(); }
    std::size_t n_cols() const { return columns_.size(); }
    bool has_labels() const { return !labels_.empty(); }

    double at(std::size_t r, std::size_t c) const { return values_[r * n_cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * n_cols() + c]; }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<int>& labels() const { return labels_; }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t c = 0; c < columns_.size(); ++c)
            if (columns_[c] == name) return c;
        throw DataError("feature matrix: no column named '" + name + "'");
    }

    // Row subset in the given order; labels follow when present.
    FeatureMatrix rows(const std::vector<std::size_t>& idx) const {
        std::vector<std::string> ids;
        std::vector<double> values;
        std::vector<int> labels;
        for (auto r : idx) {
            ids.push_back(ids_[r]);
            for (std::size_t c = 0; c < n_cols(); ++c) values.push_back(at(r, c));
            if (has_labels()) labels.push_back(labels_[r]);
        }
        return FeatureMatrix(columns_, std::move(ids), std::move(values), std::move(labels));
    }

    // Column subset by name; throws naming any missing column.
    FeatureMatrix select_columns(const std::vector<std::string>& names) const {
        std::vector<std::size_t> idx;
        for (const auto& n : names) idx.push_back(column_index(n));
        std::vector<double> values;
        values.reserve(n_rows() * names.size());
        for (std::size_t r = 0; r < n_rows(); ++r)
            for (auto c : idx) values.push_back(at(r, c));
        return FeatureMatrix(names, ids_, std::move(values), labels_);
    }

    void validate() const {
        if (values_.size() != ids_.size() * columns_.size())
            throw DataError("feature matrix: value count does not match rows x columns");
        if (!labels_.empty() && labels_.size() != ids_.size())
            throw DataError("feature matrix: label count does not match rows");
        std::set<std::string> seen;
        for (const auto& c : columns_)
            if (!seen.insert(c).second)
                throw DataError("feature matrix: duplicate column '" + c + "'");
        for (double v : values_)
            if (!std::isfinite(v)) throw DataError("feature matrix: non-finite value");
        for (int l : labels_)
            if (l != 0 && l != 1) throw DataError("feature matrix: labels must be 0/1");
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::string> ids_;
    std::vector<double> values_;  // row-major
    std::vector<int> labels_;
};

// Radiomic features per (time point, map) plus one clinical block.
struct PatientFeatures {
    std::string id;
    std::optional<int> label;
    std::map<TimePoint, std::map<std::string, FeatureVector>> radiomic;
    FeatureVector clinical;
};

// Column scheme: "{timepoint}_{map}_{class}_{feature}" for radiomic blocks
// (time points in T0..T2 order, maps lexicographic) followed by
// "clinical_{name}". Every patient must provide every requested cell.
inline FeatureMatrix assemble(const std::vector<PatientFeatures>& patients,
                              const std::set<std::string>& map_subset,
                              const std::set<TimePoint>& timepoints) {
    if (patients.empty()) throw DataError("assemble: no patients");
    if (map_subset.empty()) throw DataError("assemble: empty map subset");
    if (timepoints.empty()) throw DataError("assemble: empty time point set");

    std::vector<std::string> columns;
    std::vector<double> values;
    std::vector<std::string> ids;
    std::vector<int> labels;
    bool all_labeled = true;

    for (std::size_t pi = 0; pi < patients.size(); ++pi) {
        const auto& p = patients[pi];
        std::vector<double> row;
        std::vector<std::string> row_names;

        for (TimePoint tp : kAllTimePoints) {
            if (!timepoints.count(tp)) continue;
            const auto tp_it = p.radiomic.find(tp);
            for (const auto& map_name : map_subset) {
                if (tp_it == p.radiomic.end() || !tp_it->second.count(map_name))
                    throw DataError("assemble: patient '" + p.id + "' is missing features for (" +
                                    to_string(tp) + ", " + map_name + ")");
                const auto& fv = tp_it->second.at(map_name);
                for (const auto& [n, x] : fv.entries()) {
                    row_names.push_back(to_string(tp) + "_" + map_name + "_" + n);
                    row.push_back(x);
                }
            }
        }
        for (const auto& [n, x] : p.clinical.entries()) {
            row_names.push_back("clinical_" + n);
            row.push_back(x);
        }

        if (pi == 0) {
            columns = row_names;
        } else if (row_names != columns) {
            throw DataError("assemble: patient '" + p.id +
                            "' has a different feature-name set than the first patient");
        }
        ids.push_back(p.id);
        values.insert(values.end(), row.begin(), row.end());
        if (p.label)
            labels.push_back(*p.label);
        else
            all_labeled = false;
    }
    if (!all_labeled) labels.clear();
    return FeatureMatrix(std::move(columns), std::move(ids), std::move(values), std::move(labels));
}

// One-way two-group ANOVA F per column: MS_between / MS_within. A perfect
// separator (zero within-class variance, differing means) scores +inf so
// it ranks above every finite score; identical class means score 0.
inline std::vector<double> anova_f_scores(const FeatureMatrix& X) {
    if (!X.has_labels()) throw DataError("anova_f_scores: matrix has no labels");
    const auto& y = X.labels();
    std::size_t n0 = 0, n1 = 0;
    for (int l : y) (l ? n1 : n0)++;
    if (n0 < 2 || n1 < 2)
        throw DataError("anova_f_scores: need at least 2 samples in each class (have " +
                        std::to_string(n0) + " / " + std::to_string(n1) + ")");

    const std::size_t n = X.n_rows();
    std::vector<double> scores(X.n_cols());
    for (std::size_t c = 0; c < X.n_cols(); ++c) {
        double sum0 = 0.0, sum1 = 0.0;
        for (std::size_t r = 0; r < n; ++r) (y[r] ? sum1 : sum0) += X.at(r, c);
        const double mean0 = sum0 / static_cast<double>(n0);
        const double mean1 = sum1 / static_cast<double>(n1);
        const double grand = (sum0 + sum1) / static_cast<double>(n);

        double ss_within = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = X.at(r, c) - (y[r] ? mean1 : mean0);
            ss_within += d * d;
        }
        const double ss_between = static_cast<double>(n0) * (mean0 - grand) * (mean0 - grand) +
                                  static_cast<double>(n1) * (mean1 - grand) * (mean1 - grand);

        if (ss_between == 0.0) {
            scores[c] = 0.0;
        } else if (ss_within == 0.0) {
            scores[c] = std::numeric_limits<double>::infinity();
        } else {
            const double ms_between = ss_between;  // k - 1 == 1
            const double ms_within = ss_within / static_cast<double>(n - 2);
            scores[c] = ms_between / ms_within;
        }
    }
    return scores;
}

struct SelectionReport {
    std::vector<std::pair<std::string, double>> scores;  // column order of the scored matrix
    std::vector<std::string> selected;                   // k highest, tie-break by name
};

// k highest scores; ties resolve to the lexicographically earlier column
// name so model artifacts are reproducible. k beyond the column count
// selects everything.
inline SelectionReport select_top_k(const std::vector<std::string>& columns,
                                    const std::vector<double>& scores, std::size_t k) {
    if (k < 1) throw std::invalid_argument("select_top_k: k must be >= 1");
    if (columns.size() != scores.size())
        throw std::invalid_argument("select_top_k: column/score count mismatch");

    std::vector<std::size_t> order(columns.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return columns[a] < columns[b];
    });

    SelectionReport report;
    for (std::size_t i = 0; i < columns.size(); ++i)
        report.scores.emplace_back(columns[i], scores[i]);
    const std::size_t take = std::min(k, columns.size());
    for (std::size_t i = 0; i < take; ++i) report.selected.push_back(columns[order[i]]);
    return report;
}

inline SelectionReport select_top_k(const FeatureMatrix& X, std::size_t k) {
    return select_top_k(X.columns(), anova_f_scores(X), k);
}

}  // namespace pddwi
