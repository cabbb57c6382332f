#pragma once

// Second-order gradient boosting with regression trees and logistic loss.
//
// Class imbalance is handled by instance weights: w = scale_pos_weight for
// positives, 1 for negatives. Per sample, g = w (p - y) and h = w p (1 - p);
// split quality is the regularized second-order gain
//   gain = 1/2 [ G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l) ]
// and a leaf stores -eta G / (H + l), i.e. the learning rate is folded into
// the stored weight. Splits with non-positive gain or a child hessian sum
// below min_child_weight are rejected. Split finding is exact greedy over
// every midpoint between consecutive distinct feature values; the data
// sizes here (hundreds of rows) need no histogram approximation.
//
// Training internally canonicalizes the row order (lexicographic over
// feature values, then label), so predictions are invariant to the order
// rows arrive in, including floating-point accumulation order.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pddwi/core.hpp"
#include "pddwi/features.hpp"
#include "pddwi/metrics.hpp"
#include "pddwi/rng.hpp"

namespace pddwi {

struct TrainConfig {
    int n_rounds = 200;
    double learning_rate = 0.1;
    int max_depth = 3;
    double min_child_weight = 1.0;  // threshold on summed hessians per leaf
    double subsample = 1.0;         // row fraction per round
    double l2_lambda = 1.0;
    double scale_pos_weight = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_rounds < 0) throw std::invalid_argument("TrainConfig: n_rounds must be >= 0");
        if (!(learning_rate > 0.0 && learning_rate <= 1.0))
            throw std::invalid_argument("TrainConfig: learning_rate must be in (0, 1]");
        if (max_depth < 1) throw std::invalid_argument("TrainConfig: max_depth must be >= 1");
        if (!(min_child_weight >= 0.0))
            throw std::invalid_argument("TrainConfig: min_child_weight must be >= 0");
        if (!(subsample > 0.0 && subsample <= 1.0))
            throw std::invalid_argument("TrainConfig: subsample must be in (0, 1]");
        if (!(l2_lambda >= 0.0)) throw std::invalid_argument("TrainConfig: l2_lambda must be >= 0");
        if (!(scale_pos_weight > 0.0))
            throw std::invalid_argument("TrainConfig: scale_pos_weight must be > 0");
    }
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf output, learning rate included

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double eval(const double* row) const {
        int i = 0;
        while (!nodes[i].is_leaf())
            i = row[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
        return nodes[i].weight;
    }

    int depth() const { return depth_from(0); }

private:
    int depth_from(int i) const {
        if (nodes[i].is_leaf()) return 0;
        return 1 + std::max(depth_from(nodes[i].left), depth_from(nodes[i].right));
    }
};

struct GBTEnsemble {
    std::vector<Tree> trees;
    double base_score = 0.0;  // logit
    std::vector<std::string> schema;
    TrainConfig config;

    void validate() const {
        for (const auto& t : trees) {
            for (const auto& n : t.nodes) {
                if (!n.is_leaf() && n.feature >= static_cast<int>(schema.size()))
                    throw DataError("ensemble: split feature index outside schema");
                if (n.is_leaf() && !std::isfinite(n.weight))
                    throw DataError("ensemble: non-finite leaf weight");
            }
            if (t.depth() > config.max_depth) throw DataError("ensemble: tree exceeds max_depth");
        }
    }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Negative/positive count ratio, the instance weight on the positive class.
inline double compute_scale_pos_weight(const std::vector<int>& labels) {
    std::size_t pos = 0, neg = 0;
    for (int y : labels) (y ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw DataError("compute_scale_pos_weight: labels contain a single class (pos=" +
                        std::to_string(pos) + ", neg=" + std::to_string(neg) + ")");
    return static_cast<double>(neg) / static_cast<double>(pos);
}

namespace detail {

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool found = false;
};

struct TrainContext {
    std::size_t n = 0, m = 0;
    std::vector<std::vector<double>> feat;          // [feature][row], canonical order
    std::vector<std::vector<std::uint32_t>> order;  // per-feature row ids sorted by value
    std::vector<double> g, h;
    std::vector<char> in_node;
    double lambda = 0.0;
    double min_child_weight = 0.0;
};

inline SplitChoice find_split(const TrainContext& ctx, const std::vector<std::uint32_t>& rows,
                              double G, double H) {
    SplitChoice best;
    const double parent = G * G / (H + ctx.lambda);

    for (std::size_t c = 0; c < ctx.m; ++c) {
        double gl = 0.0, hl = 0.0;
        bool first = true;
        double prev = 0.0;
        for (std::uint32_t r : ctx.order[c]) {
            if (!ctx.in_node[r]) continue;
            const double v = ctx.feat[c][r];
            if (!first && v > prev) {
                const double gr = G - gl, hr = H - hl;
                if (hl >= ctx.min_child_weight && hr >= ctx.min_child_weight) {
                    const double gain = 0.5 * (gl * gl / (hl + ctx.lambda) +
                                               gr * gr / (hr + ctx.lambda) - parent);
                    if (gain > 0.0 && (!best.found || gain > best.gain)) {
                        best = {gain, static_cast<int>(c), prev + 0.5 * (v - prev), true};
                    }
                }
            }
            gl += ctx.g[r];
            hl += ctx.h[r];
            prev = v;
            first = false;
        }
    }
    return best;
}

inline int build_node(TrainContext& ctx, Tree& tree, std::vector<std::uint32_t> rows, int depth,
                      int max_depth, double eta) {
    double G = 0.0, H = 0.0;
    for (auto r : rows) {
        G += ctx.g[r];
        H += ctx.h[r];
    }

    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    SplitChoice split;
    if (depth < max_depth && rows.size() >= 2) {
        for (auto r : rows) ctx.in_node[r] = 1;
        split = find_split(ctx, rows, G, H);
        for (auto r : rows) ctx.in_node[r] = 0;
    }

    if (!split.found) {
        tree.nodes[idx].weight = -eta * G / (H + ctx.lambda);
        return idx;
    }

    std::vector<std::uint32_t> left_rows, right_rows;
    for (auto r : rows)
        (ctx.feat[static_cast<std::size_t>(split.feature)][r] < split.threshold ? left_rows
                                                                                : right_rows)
            .push_back(r);

    tree.nodes[idx].feature = split.feature;
    tree.nodes[idx].threshold = split.threshold;
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[idx].left = build_node(ctx, tree, std::move(left_rows), depth + 1, max_depth, eta);
    tree.nodes[idx].right = build_node(ctx, tree, std::move(right_rows), depth + 1, max_depth, eta);
    return idx;
}

// Row order that depends only on row content, not arrival order.
inline std::vector<std::uint32_t> canonical_row_order(const FeatureMatrix& X) {
    std::vector<std::uint32_t> perm(X.n_rows());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<std::uint32_t>(i);
    std::sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
        for (std::size_t c = 0; c < X.n_cols(); ++c) {
            if (X.at(a, c) != X.at(b, c)) return X.at(a, c) < X.at(b, c);
        }
        if (X.labels()[a] != X.labels()[b]) return X.labels()[a] < X.labels()[b];
        return false;
    });
    return perm;
}

}  // namespace detail

inline GBTEnsemble train(const FeatureMatrix& X, TrainConfig cfg) {
    cfg.validate();
    X.validate();
    if (!X.has_labels()) throw DataError("train: matrix has no labels");
    if (X.n_rows() < 2) throw DataError("train: need at least 2 samples");

    std::size_t pos = 0, neg = 0;
    for (int y : X.labels()) (y ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw DataError("train: training labels contain a single class (pos=" +
                        std::to_string(pos) + ", neg=" + std::to_string(neg) + ")");

    const std::size_t n = X.n_rows(), m = X.n_cols();
    const auto perm = detail::canonical_row_order(X);

    detail::TrainContext ctx;
    ctx.n = n;
    ctx.m = m;
    ctx.lambda = cfg.l2_lambda;
    ctx.min_child_weight = cfg.min_child_weight;
    ctx.feat.assign(m, std::vector<double>(n));
    std::vector<double> weight(n), label(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < m; ++c) ctx.feat[c][i] = X.at(perm[i], c);
        label[i] = static_cast<double>(X.labels()[perm[i]]);
        weight[i] = X.labels()[perm[i]] ? cfg.scale_pos_weight : 1.0;
    }

    ctx.order.assign(m, {});
    for (std::size_t c = 0; c < m; ++c) {
        auto& ord = ctx.order[c];
        ord.resize(n);
        for (std::size_t i = 0; i < n; ++i) ord[i] = static_cast<std::uint32_t>(i);
        std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
            return ctx.feat[c][a] < ctx.feat[c][b];
        });
    }

    GBTEnsemble model;
    model.schema = X.columns();
    model.config = cfg;
    // Starting from the training prevalence converges faster on imbalanced
    // labels than a 0.5 default.
    model.base_score = logit(static_cast<double>(pos) / static_cast<double>(n));

    std::vector<double> margin(n, model.base_score);
    ctx.g.assign(n, 0.0);
    ctx.h.assign(n, 0.0);
    ctx.in_node.assign(n, 0);

    Rng rng(mix_key(cfg.seed, 0x6b7));
    std::vector<std::uint32_t> all_rows(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = static_cast<std::uint32_t>(i);

    for (int round = 0; round < cfg.n_rounds; ++round) {
        std::vector<std::uint32_t> rows = all_rows;
        if (cfg.subsample < 1.0) {
            rng.shuffle(rows);
            const auto take = std::max<std::size_t>(
                1, static_cast<std::size_t>(static_cast<double>(n) * cfg.subsample));
            rows.resize(take);
            std::sort(rows.begin(), rows.end());
        }

        for (auto r : rows) {
            const double p = sigmoid(margin[r]);
            ctx.g[r] = weight[r] * (p - label[r]);
            ctx.h[r] = weight[r] * p * (1.0 - p);
        }

        Tree tree;
        detail::build_node(ctx, tree, std::move(rows), 0, cfg.max_depth, cfg.learning_rate);

        for (std::size_t i = 0; i < n; ++i) {
            int node = 0;
            while (!tree.nodes[node].is_leaf()) {
                const auto& nd = tree.nodes[node];
                node = ctx.feat[static_cast<std::size_t>(nd.feature)][i] < nd.threshold ? nd.left
                                                                                        : nd.right;
            }
            margin[i] += tree.nodes[node].weight;
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

// sigmoid(base_score + sum of tree outputs) per row. The matrix schema must
// equal the model schema exactly; select_columns() re-orders supersets.
inline std::vector<double> predict_proba(const GBTEnsemble& model, const FeatureMatrix& X) {
    if (X.columns() != model.schema) {
        std::string missing;
        for (const auto& c : model.schema) {
            bool found = false;
            for (const auto& xc : X.columns()) found |= (xc == c);
            if (!found) {
                missing = c;
                break;
            }
        }
        throw DataError(missing.empty()
                            ? "predict: column order/content differs from model schema"
                            : "predict: matrix is missing model column '" + missing + "'");
    }
    std::vector<double> out(X.n_rows());
    std::vector<double> row(X.n_cols());
    for (std::size_t r = 0; r < X.n_rows(); ++r) {
        for (std::size_t c = 0; c < X.n_cols(); ++c) row[c] = X.at(r, c);
        double z = model.base_score;
        for (const auto& t : model.trees) z += t.eval(row.data());
        out[r] = sigmoid(z);
    }
    return out;
}

// Stratified fold assignment: per-class seeded shuffle, round-robin deal.
inline std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                              int k_folds, std::uint64_t seed) {
    if (k_folds < 2) throw std::invalid_argument("stratified_folds: k_folds must be >= 2");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);

    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k_folds));
    int cls = 0;
    for (auto* group : {&pos, &neg}) {
        Rng rng(mix_key(seed, 0xf01d, static_cast<std::uint64_t>(cls++)));
        rng.shuffle(*group);
        for (std::size_t i = 0; i < group->size(); ++i)
            folds[i % static_cast<std::size_t>(k_folds)].push_back((*group)[i]);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());

    for (const auto& f : folds) {
        std::size_t fp = 0, fn = 0;
        for (auto r : f) (labels[r] ? fp : fn)++;
        if (fp == 0 || fn == 0)
            throw DataError("stratified_folds: a fold has a single class; too few samples per "
                            "class for " +
                            std::to_string(k_folds) + " folds");
    }
    return folds;
}

struct CvCandidate {
    TrainConfig config;
    std::size_t select_k = 100;  // ANOVA top-k features, re-fit per fold
};

struct CvOutcome {
    CvCandidate best;
    std::size_t best_index = 0;
    std::vector<double> mean_auc;  // one per grid entry, fold-averaged
};

// Grid search by stratified K-fold validation AUC. The feature-selection
// stage runs inside each training fold so validation rows never influence
// the selected columns. Ties resolve to the earlier grid entry. With
// auto_scale_pos_weight, the positive-class weight is recomputed from each
// training fold's label counts.
inline CvOutcome cross_validate(const FeatureMatrix& X, const std::vector<CvCandidate>& grid,
                                int k_folds, std::uint64_t seed,
                                bool auto_scale_pos_weight = true) {
    if (grid.empty()) throw std::invalid_argument("cross_validate: empty grid");
    if (!X.has_labels()) throw DataError("cross_validate: matrix has no labels");

    const auto folds = stratified_folds(X.labels(), k_folds, seed);

    CvOutcome out;
    out.mean_auc.assign(grid.size(), 0.0);

    for (std::size_t ci = 0; ci < grid.size(); ++ci) {
        double auc_sum = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<std::size_t> train_rows;
            for (std::size_t g = 0; g < folds.size(); ++g)
                if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());

            const FeatureMatrix Xtr = X.rows(train_rows);
            const auto report = select_top_k(Xtr, grid[ci].select_k);
            const FeatureMatrix Xtr_sel = Xtr.select_columns(report.selected);
            TrainConfig fold_cfg = grid[ci].config;
            if (auto_scale_pos_weight)
                fold_cfg.scale_pos_weight = compute_scale_pos_weight(Xtr.labels());
            const GBTEnsemble model = train(Xtr_sel, fold_cfg);

            const FeatureMatrix Xval = X.rows(folds[f]).select_columns(report.selected);
            const auto scores = predict_proba(model, Xval);
            auc_sum += auc(scores, X.rows(folds[f]).labels());
        }
        out.mean_auc[ci] = auc_sum / static_cast<double>(folds.size());
        if (ci == 0 || out.mean_auc[ci] > out.mean_auc[out.best_index]) out.best_index = ci;
    }
    out.best = grid[out.best_index];
    return out;
}

}  // namespace pddwi
