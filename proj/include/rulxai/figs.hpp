#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rulxai/common.hpp"
#include "rulxai/tree.hpp"

namespace rulxai {

struct FigsSpec {
    int max_depth = 5;
    int max_splits = 100;
};

// Greedy tree-sum: grows a forest one split at a time, always taking the
// globally best squared-error reduction among every current leaf and a
// fresh root stump fit to the full residual.
struct FigsModel {
    FigsSpec spec;
    std::vector<std::vector<TreeNode>> trees;

    double predict_row(const double* x) const {
        double s = 0.0;
        for (const auto& t : trees) s += tree_detail::predict_node(t, x);
        return s;
    }
    std::vector<double> predict(const Matrix& X) const {
        std::vector<double> out(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i));
        return out;
    }
    int total_splits() const {
        int c = 0;
        for (const auto& t : trees)
            for (const auto& nd : t) c += !nd.is_leaf();
        return c;
    }
};

namespace figs_detail {

struct Candidate {
    bool found = false;
    int tree = -1; // -1 means new root stump
    int node = -1;
    double gain = 0.0;
    tree_detail::BestSplit split;
};

} // namespace figs_detail

inline FigsModel fit_figs(const Matrix& X, const std::vector<double>& y, const FigsSpec& spec) {
    if (X.rows == 0) throw std::invalid_argument("fit_figs: empty training set");
    if (X.rows != y.size()) throw std::invalid_argument("fit_figs: X/y length mismatch");
    if (spec.max_splits < 1 || spec.max_depth < 1) throw std::invalid_argument("fit_figs: invalid spec");

    const std::size_t n = X.rows;
    FigsModel model;
    model.spec = spec;

    std::vector<std::vector<int>> depths;          // per tree, per node
    std::vector<std::vector<int>> leaf_of;         // per tree, per row: leaf node index
    std::vector<std::vector<double>> tree_pred;    // per tree, per row
    std::vector<double> total_pred(n, 0.0);

    const double eps = 1e-12 * std::max(1.0, variance(y) * static_cast<double>(n));

    int splits_done = 0;
    while (splits_done < spec.max_splits) {
        figs_detail::Candidate best;

        // existing leaves, oldest tree first, node order within a tree
        for (std::size_t k = 0; k < model.trees.size(); ++k) {
            std::vector<std::vector<std::size_t>> rows_at(model.trees[k].size());
            for (std::size_t i = 0; i < n; ++i) rows_at[leaf_of[k][i]].push_back(i);
            for (std::size_t nd = 0; nd < model.trees[k].size(); ++nd) {
                if (!model.trees[k][nd].is_leaf()) continue;
                if (depths[k][nd] >= spec.max_depth) continue;
                const auto& rows = rows_at[nd];
                if (rows.size() < 2) continue;
                std::vector<double> resid(n); // residual vs all other trees
                for (std::size_t i : rows) resid[i] = y[i] - total_pred[i] + tree_pred[k][i];
                const auto s = tree_detail::best_split(X, resid, rows, 1);
                if (s.found && s.gain > best.gain + eps) {
                    best.found = true;
                    best.tree = static_cast<int>(k);
                    best.node = static_cast<int>(nd);
                    best.gain = s.gain;
                    best.split = s;
                }
            }
        }

        // fresh root stump on the full residual; its gain includes the
        // benefit of the new root mean itself
        if (n >= 2) {
            std::vector<double> resid(n);
            double rsum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                resid[i] = y[i] - total_pred[i];
                rsum += resid[i];
            }
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), std::size_t{0});
            const auto s = tree_detail::best_split(X, resid, all, 1);
            if (s.found) {
                const double gain = s.gain + rsum * rsum / static_cast<double>(n);
                if (gain > best.gain + eps) {
                    best.found = true;
                    best.tree = -1;
                    best.gain = gain;
                    best.split = s;
                }
            }
        }

        if (!best.found) break;

        std::size_t k;
        if (best.tree < 0) {
            // new tree
            k = model.trees.size();
            model.trees.emplace_back();
            model.trees[k].push_back(TreeNode{});
            depths.emplace_back(std::vector<int>{0});
            leaf_of.emplace_back(std::vector<int>(n, 0));
            tree_pred.emplace_back(std::vector<double>(n, 0.0));
            best.node = 0;
        } else {
            k = static_cast<std::size_t>(best.tree);
        }

        auto& tr = model.trees[k];
        const int nd = best.node;
        tr[nd].feature = best.split.feature;
        tr[nd].threshold = best.split.threshold;
        tr[nd].gain = best.split.gain;
        tr[nd].left = static_cast<int>(tr.size());
        tr.push_back(TreeNode{});
        tr[nd].right = static_cast<int>(tr.size());
        tr.push_back(TreeNode{});
        depths[k].push_back(depths[k][nd] + 1);
        depths[k].push_back(depths[k][nd] + 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (leaf_of[k][i] != nd) continue;
            leaf_of[k][i] = (X.at(i, tr[nd].feature) <= tr[nd].threshold) ? tr[nd].left : tr[nd].right;
        }

        // refit all leaf values of the affected tree to the residual
        std::vector<double> sum(tr.size(), 0.0);
        std::vector<int> cnt(tr.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[leaf_of[k][i]] += y[i] - total_pred[i] + tree_pred[k][i];
            cnt[leaf_of[k][i]] += 1;
        }
        for (std::size_t m = 0; m < tr.size(); ++m) {
            if (!tr[m].is_leaf()) continue;
            tr[m].n_samples = cnt[m];
            if (cnt[m] > 0) tr[m].value = sum[m] / cnt[m];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double p = tr[leaf_of[k][i]].value;
            total_pred[i] += p - tree_pred[k][i];
            tree_pred[k][i] = p;
        }
        ++splits_done;
    }

    if (model.trees.empty()) {
        // nothing worth splitting (constant target): single leaf at the mean
        TreeNode leaf;
        leaf.value = mean(y);
        leaf.n_samples = static_cast<int>(n);
        model.trees.push_back({leaf});
    }

    // interior node sample counts, for structure dumps
    for (std::size_t k = 0; k < model.trees.size(); ++k) {
        auto& tr = model.trees[k];
        for (std::size_t m = tr.size(); m-- > 0;)
            if (!tr[m].is_leaf()) tr[m].n_samples = tr[tr[m].left].n_samples + tr[tr[m].right].n_samples;
    }
    return model;
}

} // namespace rulxai
