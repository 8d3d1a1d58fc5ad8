#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rulxai/common.hpp"

namespace rulxai {

struct TreeSpec {
    int max_depth = 5;
    int min_samples_leaf = 5;
    double prune_alpha = 0.0;
};

struct TreeNode {
    int feature = -1;       // -1 for leaves
    double threshold = 0.0; // goes left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0; // leaf prediction (mean of its rows)
    int n_samples = 0;
    double gain = 0.0; // SSE reduction realized by this split

    bool is_leaf() const { return feature < 0; }
};

namespace tree_detail {

struct BestSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    double left_sum = 0.0, right_sum = 0.0;
    std::size_t left_n = 0, right_n = 0;
};

// Variance-reduction split over midpoints of consecutive distinct sorted
// values. Gains compare with strict '>', so the lowest feature index and
// then the lowest threshold win ties.
inline BestSplit best_split(const Matrix& X, const std::vector<double>& y,
                            const std::vector<std::size_t>& idx, int min_leaf) {
    BestSplit best;
    const std::size_t n = idx.size();
    if (n < 2 * static_cast<std::size_t>(min_leaf)) return best;

    double total_sum = 0.0, total_sq = 0.0;
    for (std::size_t i : idx) {
        total_sum += y[i];
        total_sq += y[i] * y[i];
    }
    const double node_sse = total_sq - total_sum * total_sum / static_cast<double>(n);
    const double eps = 1e-12 * std::max(1.0, std::abs(node_sse));
    const double parent_term = total_sum * total_sum / static_cast<double>(n);

    std::vector<std::pair<double, double>> xy(n); // (feature value, target)
    for (std::size_t f = 0; f < X.cols; ++f) {
        for (std::size_t k = 0; k < n; ++k) xy[k] = {X.at(idx[k], f), y[idx[k]]};
        std::sort(xy.begin(), xy.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (xy.front().first == xy.back().first) continue;

        double left_sum = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            left_sum += xy[k].second;
            if (xy[k].first == xy[k + 1].first) continue;
            const std::size_t nl = k + 1, nr = n - nl;
            if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
            const double right_sum = total_sum - left_sum;
            const double gain = left_sum * left_sum / static_cast<double>(nl) +
                                right_sum * right_sum / static_cast<double>(nr) - parent_term;
            if (gain > best.gain + eps) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (xy[k].first + xy[k + 1].first);
                best.gain = gain;
                best.left_sum = left_sum;
                best.right_sum = right_sum;
                best.left_n = nl;
                best.right_n = nr;
            }
        }
    }
    return best;
}

inline double predict_node(const std::vector<TreeNode>& nodes, const double* x) {
    int cur = 0;
    while (!nodes[cur].is_leaf())
        cur = (x[nodes[cur].feature] <= nodes[cur].threshold) ? nodes[cur].left : nodes[cur].right;
    return nodes[cur].value;
}

} // namespace tree_detail

struct DecisionTree {
    TreeSpec spec;
    std::vector<TreeNode> nodes;

    double predict_row(const double* x) const { return tree_detail::predict_node(nodes, x); }
    std::vector<double> predict(const Matrix& X) const {
        std::vector<double> out(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i));
        return out;
    }
    int n_leaves() const {
        int c = 0;
        for (const auto& nd : nodes) c += nd.is_leaf();
        return c;
    }
};

namespace tree_detail {

inline void grow(DecisionTree& t, const Matrix& X, const std::vector<double>& y,
                 std::vector<std::size_t> idx, int node, int depth) {
    double sum = 0.0;
    for (std::size_t i : idx) sum += y[i];
    t.nodes[node].n_samples = static_cast<int>(idx.size());
    t.nodes[node].value = idx.empty() ? 0.0 : sum / static_cast<double>(idx.size());

    if (depth >= t.spec.max_depth) return;
    const BestSplit s = best_split(X, y, idx, t.spec.min_samples_leaf);
    if (!s.found) return;

    std::vector<std::size_t> left_idx, right_idx;
    left_idx.reserve(s.left_n);
    right_idx.reserve(s.right_n);
    for (std::size_t i : idx)
        (X.at(i, static_cast<std::size_t>(s.feature)) <= s.threshold ? left_idx : right_idx).push_back(i);

    t.nodes[node].feature = s.feature;
    t.nodes[node].threshold = s.threshold;
    t.nodes[node].gain = s.gain;
    t.nodes[node].left = static_cast<int>(t.nodes.size());
    t.nodes.push_back(TreeNode{});
    t.nodes[node].right = static_cast<int>(t.nodes.size());
    t.nodes.push_back(TreeNode{});

    grow(t, X, y, std::move(left_idx), t.nodes[node].left, depth + 1);
    grow(t, X, y, std::move(right_idx), t.nodes[node].right, depth + 1);
}

// Weakest-link cost-complexity pruning: collapse subtrees whose per-leaf
// SSE increase is <= alpha.
inline double subtree_sse(const std::vector<TreeNode>& nodes, const Matrix& X, const std::vector<double>& y,
                          int node, const std::vector<std::vector<std::size_t>>& rows) {
    double sse = 0.0;
    for (std::size_t i : rows[node]) {
        int cur = node;
        const double* x = X.row(i);
        while (!nodes[cur].is_leaf())
            cur = (x[nodes[cur].feature] <= nodes[cur].threshold) ? nodes[cur].left : nodes[cur].right;
        sse += (y[i] - nodes[cur].value) * (y[i] - nodes[cur].value);
    }
    return sse;
}

} // namespace tree_detail

inline DecisionTree fit_decision_tree(const Matrix& X, const std::vector<double>& y, const TreeSpec& spec) {
    if (X.rows == 0) throw std::invalid_argument("fit_decision_tree: empty training set");
    if (X.rows != y.size()) throw std::invalid_argument("fit_decision_tree: X/y length mismatch");
    if (spec.max_depth < 1 || spec.min_samples_leaf < 1)
        throw std::invalid_argument("fit_decision_tree: invalid spec");

    DecisionTree t;
    t.spec = spec;
    t.nodes.push_back(TreeNode{});
    std::vector<std::size_t> idx(X.rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    tree_detail::grow(t, X, y, std::move(idx), 0, 0);

    if (spec.prune_alpha > 0.0) {
        // rows reaching each node
        for (;;) {
            std::vector<std::vector<std::size_t>> rows(t.nodes.size());
            for (std::size_t i = 0; i < X.rows; ++i) {
                int cur = 0;
                rows[0].push_back(i);
                while (!t.nodes[cur].is_leaf()) {
                    cur = (X.at(i, t.nodes[cur].feature) <= t.nodes[cur].threshold) ? t.nodes[cur].left
                                                                                    : t.nodes[cur].right;
                    rows[cur].push_back(i);
                }
            }
            int weakest = -1;
            double weakest_g = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < t.nodes.size(); ++k) {
                if (t.nodes[k].is_leaf()) continue;
                double collapsed = 0.0;
                for (std::size_t i : rows[k]) collapsed += (y[i] - t.nodes[k].value) * (y[i] - t.nodes[k].value);
                const double kept = tree_detail::subtree_sse(t.nodes, X, y, static_cast<int>(k), rows);
                int leaves = 0;
                std::vector<int> stack{static_cast<int>(k)};
                while (!stack.empty()) {
                    const int nd = stack.back();
                    stack.pop_back();
                    if (t.nodes[nd].is_leaf()) {
                        ++leaves;
                    } else {
                        stack.push_back(t.nodes[nd].left);
                        stack.push_back(t.nodes[nd].right);
                    }
                }
                const double g = (collapsed - kept) / std::max(1, leaves - 1);
                if (g < weakest_g) {
                    weakest_g = g;
                    weakest = static_cast<int>(k);
                }
            }
            if (weakest < 0 || weakest_g > spec.prune_alpha) break;
            t.nodes[weakest].feature = -1;
            t.nodes[weakest].left = t.nodes[weakest].right = -1;
        }
        // drop nodes orphaned by collapsed subtrees
        std::vector<int> reachable;
        std::vector<int> remap(t.nodes.size(), -1);
        std::vector<int> stack{0};
        while (!stack.empty()) {
            const int old_idx = stack.back();
            stack.pop_back();
            remap[old_idx] = static_cast<int>(reachable.size());
            reachable.push_back(old_idx);
            if (!t.nodes[old_idx].is_leaf()) {
                stack.push_back(t.nodes[old_idx].right);
                stack.push_back(t.nodes[old_idx].left);
            }
        }
        std::vector<TreeNode> compact;
        compact.reserve(reachable.size());
        for (int old_idx : reachable) {
            TreeNode nd = t.nodes[old_idx];
            if (!nd.is_leaf()) {
                nd.left = remap[nd.left];
                nd.right = remap[nd.right];
            }
            compact.push_back(nd);
        }
        t.nodes = std::move(compact);
    }
    return t;
}

} // namespace rulxai
