// tree.hpp - CART trees shared by the tree-based learners
//
// Splits are binary and axis-aligned, chosen by exhaustive scan over the
// midpoints of sorted distinct feature values. Ties keep the first
// candidate in (feature index, threshold) scan order. A row goes left when
// its value is <= the threshold.
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "wfp/rng.hpp"

namespace wfp {

using Matrix = std::vector<std::vector<double>>;

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> dist; // classification: per-class weight totals
    double value = 0.0;       // regression leaf value
};

struct Tree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf_for(std::span<const double> row) const {
        size_t at = 0;
        while (nodes[at].feature >= 0) {
            const TreeNode& n = nodes[at];
            at = static_cast<size_t>(row[static_cast<size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
        }
        return nodes[at];
    }
};

namespace tree_detail {

struct SplitChoice {
    bool found = false;
    size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0; // lower is better
};

// weighted Gini over children, lower is better
inline SplitChoice best_classification_split(const Matrix& X, std::span<const int> y,
                                             std::span<const double> w,
                                             std::span<const size_t> rows, size_t n_classes,
                                             std::span<const size_t> features,
                                             size_t min_samples_leaf) {
    SplitChoice best;
    std::vector<size_t> order(rows.begin(), rows.end());
    std::vector<double> left_w(n_classes), right_w(n_classes);
    for (size_t f : features) {
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            double va = X[a][f], vb = X[b][f];
            if (va != vb) return va < vb;
            return a < b;
        });
        std::fill(left_w.begin(), left_w.end(), 0.0);
        std::fill(right_w.begin(), right_w.end(), 0.0);
        double left_total = 0.0, right_total = 0.0;
        for (size_t i : order) {
            right_w[static_cast<size_t>(y[i])] += w[i];
            right_total += w[i];
        }
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            size_t row = order[i];
            double wi = w[row];
            left_w[static_cast<size_t>(y[row])] += wi;
            left_total += wi;
            right_w[static_cast<size_t>(y[row])] -= wi;
            right_total -= wi;
            double a = X[row][f];
            double b = X[order[i + 1]][f];
            if (a == b) continue;
            size_t n_left = i + 1;
            size_t n_right = order.size() - n_left;
            if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
            double gl = 1.0, gr = 1.0;
            if (left_total > 0)
                for (double c : left_w) gl -= (c / left_total) * (c / left_total);
            if (right_total > 0)
                for (double c : right_w) gr -= (c / right_total) * (c / right_total);
            double total = left_total + right_total;
            double score = total > 0
                               ? (left_total / total) * gl + (right_total / total) * gr
                               : 0.0;
            if (!best.found || score < best.score) {
                double mid = a + (b - a) / 2.0;
                if (mid >= b) mid = a; // adjacent doubles: keep the right side nonempty
                best = {true, f, mid, score};
            }
        }
    }
    return best;
}

// variance criterion via sum-of-squares identity, lower is better
inline SplitChoice best_regression_split(const Matrix& X, std::span<const double> target,
                                         std::span<const size_t> rows,
                                         std::span<const size_t> features,
                                         size_t min_samples_leaf) {
    SplitChoice best;
    std::vector<size_t> order(rows.begin(), rows.end());
    for (size_t f : features) {
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            double va = X[a][f], vb = X[b][f];
            if (va != vb) return va < vb;
            return a < b;
        });
        double sum_total = 0.0;
        for (size_t i : order) sum_total += target[i];
        double sum_left = 0.0;
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            sum_left += target[order[i]];
            double a = X[order[i]][f];
            double b = X[order[i + 1]][f];
            if (a == b) continue;
            size_t n_left = i + 1;
            size_t n_right = order.size() - n_left;
            if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
            double sum_right = sum_total - sum_left;
            // minimizing SSE == maximizing sum^2/n over children
            double gain = sum_left * sum_left / static_cast<double>(n_left) +
                          sum_right * sum_right / static_cast<double>(n_right);
            double score = -gain;
            if (!best.found || score < best.score) {
                double mid = a + (b - a) / 2.0;
                if (mid >= b) mid = a;
                best = {true, f, mid, score};
            }
        }
    }
    return best;
}

} // namespace tree_detail

struct ClassTreeConfig {
    int max_depth = 0; // 0 = unbounded
    size_t min_samples_split = 2;
    size_t min_samples_leaf = 1;
    size_t max_features = 0; // 0 = all; otherwise uniform subsample per split
    Rng* rng = nullptr;      // required when max_features > 0
};

inline Tree fit_classification_tree(const Matrix& X, std::span<const int> y, size_t n_classes,
                                    std::span<const double> weights,
                                    std::span<const size_t> row_indices,
                                    const ClassTreeConfig& cfg) {
    Tree tree;
    size_t arity = X.empty() ? 0 : X[0].size();

    struct Frame {
        std::vector<size_t> rows;
        int depth;
        int node;
    };
    auto make_leaf = [&](TreeNode& node, std::span<const size_t> rows) {
        node.feature = -1;
        node.dist.assign(n_classes, 0.0);
        for (size_t i : rows) node.dist[static_cast<size_t>(y[i])] += weights[i];
    };

    std::vector<Frame> stack;
    tree.nodes.emplace_back();
    stack.push_back({std::vector<size_t>(row_indices.begin(), row_indices.end()), 0, 0});
    std::vector<size_t> all_features(arity);
    for (size_t j = 0; j < arity; ++j) all_features[j] = j;

    while (!stack.empty()) {
        Frame fr = std::move(stack.back());
        stack.pop_back();
        TreeNode& node = tree.nodes[static_cast<size_t>(fr.node)];
        bool pure = true;
        for (size_t i = 1; i < fr.rows.size() && pure; ++i)
            pure = y[fr.rows[i]] == y[fr.rows[0]];
        bool depth_capped = cfg.max_depth > 0 && fr.depth >= cfg.max_depth;
        if (pure || depth_capped || fr.rows.size() < cfg.min_samples_split) {
            make_leaf(node, fr.rows);
            continue;
        }
        std::vector<size_t> features = all_features;
        if (cfg.max_features > 0 && cfg.max_features < arity && cfg.rng) {
            features = cfg.rng->sample_without_replacement(arity, cfg.max_features);
            std::sort(features.begin(), features.end());
        }
        auto split = tree_detail::best_classification_split(X, y, weights, fr.rows, n_classes,
                                                            features, cfg.min_samples_leaf);
        if (!split.found) {
            make_leaf(node, fr.rows);
            continue;
        }
        std::vector<size_t> left_rows, right_rows;
        for (size_t i : fr.rows)
            (X[i][split.feature] <= split.threshold ? left_rows : right_rows).push_back(i);
        int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        int right = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[static_cast<size_t>(fr.node)].feature = static_cast<int>(split.feature);
        tree.nodes[static_cast<size_t>(fr.node)].threshold = split.threshold;
        tree.nodes[static_cast<size_t>(fr.node)].left = left;
        tree.nodes[static_cast<size_t>(fr.node)].right = right;
        // right pushed first so the left child is processed next (stable order)
        stack.push_back({std::move(right_rows), fr.depth + 1, right});
        stack.push_back({std::move(left_rows), fr.depth + 1, left});
    }
    return tree;
}

struct RegTreeConfig {
    int max_depth = 3;
    size_t min_samples_split = 2;
    size_t min_samples_leaf = 1;
};

// Fits to `target` (negative gradients); leaf values are a Newton step
// sum(residual) / sum(hessian) with the denominator floored at 1e-12.
inline Tree fit_regression_tree(const Matrix& X, std::span<const double> target,
                                std::span<const double> hessian,
                                std::span<const size_t> row_indices, const RegTreeConfig& cfg) {
    Tree tree;
    size_t arity = X.empty() ? 0 : X[0].size();
    std::vector<size_t> all_features(arity);
    for (size_t j = 0; j < arity; ++j) all_features[j] = j;

    struct Frame {
        std::vector<size_t> rows;
        int depth;
        int node;
    };
    auto make_leaf = [&](TreeNode& node, std::span<const size_t> rows) {
        node.feature = -1;
        double num = 0.0, den = 0.0;
        for (size_t i : rows) {
            num += target[i];
            den += hessian[i];
        }
        node.value = num / std::max(den, 1e-12);
    };

    std::vector<Frame> stack;
    tree.nodes.emplace_back();
    stack.push_back({std::vector<size_t>(row_indices.begin(), row_indices.end()), 0, 0});
    while (!stack.empty()) {
        Frame fr = std::move(stack.back());
        stack.pop_back();
        TreeNode& node = tree.nodes[static_cast<size_t>(fr.node)];
        bool constant = true;
        for (size_t i = 1; i < fr.rows.size() && constant; ++i)
            constant = target[fr.rows[i]] == target[fr.rows[0]];
        bool depth_capped = cfg.max_depth > 0 && fr.depth >= cfg.max_depth;
        if (constant || depth_capped || fr.rows.size() < cfg.min_samples_split) {
            make_leaf(node, fr.rows);
            continue;
        }
        auto split = tree_detail::best_regression_split(X, target, fr.rows, all_features,
                                                        cfg.min_samples_leaf);
        if (!split.found) {
            make_leaf(node, fr.rows);
            continue;
        }
        std::vector<size_t> left_rows, right_rows;
        for (size_t i : fr.rows)
            (X[i][split.feature] <= split.threshold ? left_rows : right_rows).push_back(i);
        int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        int right = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[static_cast<size_t>(fr.node)].feature = static_cast<int>(split.feature);
        tree.nodes[static_cast<size_t>(fr.node)].threshold = split.threshold;
        tree.nodes[static_cast<size_t>(fr.node)].left = left;
        tree.nodes[static_cast<size_t>(fr.node)].right = right;
        stack.push_back({std::move(right_rows), fr.depth + 1, right});
        stack.push_back({std::move(left_rows), fr.depth + 1, left});
    }
    return tree;
}

} // namespace wfp
