#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rulxai/common.hpp"
#include "rulxai/rng.hpp"

namespace rulxai {

struct EbmSpec {
    int n_interactions = 10;
    int outer_bags = 8;
    int inner_bags = 0;
    int max_bins = 256;
    int max_interaction_bins = 32;
    int max_rounds = 5000;
    int early_stop_rounds = 50;
    double early_stop_tol = 1e-4;
    double learning_rate = 0.01;
    double validation_fraction = 0.15;
    std::uint64_t seed = 0;
};

struct EbmPairTerm {
    int f1 = -1, f2 = -1;
    std::vector<double> table; // bins(f1) x bins(f2), row-major
};

// Additive model of per-feature (and selected pairwise) contribution
// tables over quantile-binned axes, fit by cyclic gradient boosting of
// <=3-leaf trees; bags are averaged into a single table per term.
struct EbmModel {
    EbmSpec spec;
    double intercept = 0.0;
    std::vector<std::vector<double>> main_cuts;   // per feature, interior cut points
    std::vector<std::vector<double>> main_tables; // per feature, cuts+1 entries
    std::vector<std::vector<int>> main_counts;    // training rows per bin
    std::vector<std::vector<double>> pair_cuts;   // per feature, coarse axes for pair terms
    std::vector<EbmPairTerm> pairs;
    std::vector<std::vector<int>> pair_counts; // training rows per cell, aligned with pairs
    std::vector<std::string> warnings;

    std::size_t main_bins(std::size_t f) const { return main_cuts[f].size() + 1; }
    std::size_t pair_bins(std::size_t f) const { return pair_cuts[f].size() + 1; }

    double predict_row(const double* x) const {
        double s = intercept;
        for (std::size_t f = 0; f < main_tables.size(); ++f) s += main_tables[f][bin_of(main_cuts[f], x[f])];
        for (const auto& p : pairs) {
            const std::size_t i1 = bin_of(pair_cuts[p.f1], x[p.f1]);
            const std::size_t i2 = bin_of(pair_cuts[p.f2], x[p.f2]);
            s += p.table[i1 * pair_bins(p.f2) + i2];
        }
        return s;
    }
    std::vector<double> predict(const Matrix& X) const {
        std::vector<double> out(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i));
        return out;
    }
};

namespace ebm_detail {

// Best single cut of a histogram segment [lo, hi); returns gain and cut k
// (left = bins lo..k, right = k+1..hi-1).
struct Cut {
    bool found = false;
    int k = -1;
    double gain = 0.0;
    double left_mean = 0.0, right_mean = 0.0;
};

inline Cut best_cut(const std::vector<double>& sums, const std::vector<double>& cnts, int lo, int hi) {
    Cut best;
    double tot_s = 0.0, tot_c = 0.0;
    for (int b = lo; b < hi; ++b) {
        tot_s += sums[b];
        tot_c += cnts[b];
    }
    if (tot_c < 2.0) return best;
    const double parent = tot_s * tot_s / tot_c;
    double ls = 0.0, lc = 0.0;
    for (int k = lo; k < hi - 1; ++k) {
        ls += sums[k];
        lc += cnts[k];
        const double rc = tot_c - lc;
        if (lc < 1.0 || rc < 1.0) continue;
        const double rs = tot_s - ls;
        const double gain = ls * ls / lc + rs * rs / rc - parent;
        if (gain > best.gain + 1e-12) {
            best.found = true;
            best.k = k;
            best.gain = gain;
            best.left_mean = ls / lc;
            best.right_mean = rs / rc;
        }
    }
    return best;
}

struct Segment {
    int lo, hi; // bin range [lo, hi)
    double mean;
};

// Greedy <=3-leaf tree on a binned axis: one root cut, then the best cut
// of either child.
inline std::vector<Segment> three_leaf_tree(const std::vector<double>& sums, const std::vector<double>& cnts) {
    const int B = static_cast<int>(sums.size());
    const Cut root = best_cut(sums, cnts, 0, B);
    if (!root.found) return {};
    std::vector<Segment> segs{{0, root.k + 1, root.left_mean}, {root.k + 1, B, root.right_mean}};
    const Cut cl = best_cut(sums, cnts, 0, root.k + 1);
    const Cut cr = best_cut(sums, cnts, root.k + 1, B);
    const bool use_left = cl.found && (!cr.found || cl.gain >= cr.gain);
    if (use_left) {
        segs = {{0, cl.k + 1, cl.left_mean}, {cl.k + 1, root.k + 1, cl.right_mean}, {root.k + 1, B, root.right_mean}};
    } else if (cr.found) {
        segs = {{0, root.k + 1, root.left_mean}, {root.k + 1, cr.k + 1, cr.left_mean}, {cr.k + 1, B, cr.right_mean}};
    }
    return segs;
}

struct PairGrid {
    int B1 = 0, B2 = 0;
    std::vector<double> sums, cnts; // B1*B2
};

struct Rect {
    int l1, h1, l2, h2; // [l1,h1) x [l2,h2)
    double mean = 0.0;
};

struct RectCut {
    bool found = false;
    int axis = -1; // 0 cuts axis1, 1 cuts axis2
    int k = -1;
    double gain = 0.0;
};

inline RectCut best_rect_cut(const PairGrid& g, const Rect& r) {
    RectCut best;
    double tot_s = 0.0, tot_c = 0.0;
    for (int i = r.l1; i < r.h1; ++i)
        for (int j = r.l2; j < r.h2; ++j) {
            tot_s += g.sums[i * g.B2 + j];
            tot_c += g.cnts[i * g.B2 + j];
        }
    if (tot_c < 2.0) return best;
    const double parent = tot_s * tot_s / tot_c;
    for (int axis = 0; axis < 2; ++axis) {
        const int lo = axis == 0 ? r.l1 : r.l2;
        const int hi = axis == 0 ? r.h1 : r.h2;
        double ls = 0.0, lc = 0.0;
        for (int k = lo; k < hi - 1; ++k) {
            // add marginal slice k
            if (axis == 0)
                for (int j = r.l2; j < r.h2; ++j) {
                    ls += g.sums[k * g.B2 + j];
                    lc += g.cnts[k * g.B2 + j];
                }
            else
                for (int i = r.l1; i < r.h1; ++i) {
                    ls += g.sums[i * g.B2 + k];
                    lc += g.cnts[i * g.B2 + k];
                }
            const double rc = tot_c - lc;
            if (lc < 1.0 || rc < 1.0) continue;
            const double rs = tot_s - ls;
            const double gain = ls * ls / lc + rs * rs / rc - parent;
            if (gain > best.gain + 1e-12) {
                best.found = true;
                best.axis = axis;
                best.k = k;
                best.gain = gain;
            }
        }
    }
    return best;
}

inline double rect_mean(const PairGrid& g, const Rect& r) {
    double s = 0.0, c = 0.0;
    for (int i = r.l1; i < r.h1; ++i)
        for (int j = r.l2; j < r.h2; ++j) {
            s += g.sums[i * g.B2 + j];
            c += g.cnts[i * g.B2 + j];
        }
    return c > 0.0 ? s / c : 0.0;
}

inline std::pair<Rect, Rect> split_rect(const Rect& r, const RectCut& c) {
    Rect a = r, b = r;
    if (c.axis == 0) {
        a.h1 = c.k + 1;
        b.l1 = c.k + 1;
    } else {
        a.h2 = c.k + 1;
        b.l2 = c.k + 1;
    }
    return {a, b};
}

// <=3 rectangular leaves on a 2D binned grid.
inline std::vector<Rect> three_leaf_rects(const PairGrid& g) {
    Rect root{0, g.B1, 0, g.B2, 0.0};
    const RectCut rc = best_rect_cut(g, root);
    if (!rc.found) return {};
    auto [a, b] = split_rect(root, rc);
    const RectCut ca = best_rect_cut(g, a);
    const RectCut cb = best_rect_cut(g, b);
    std::vector<Rect> out;
    const bool use_a = ca.found && (!cb.found || ca.gain >= cb.gain);
    if (use_a) {
        auto [a1, a2] = split_rect(a, ca);
        out = {a1, a2, b};
    } else if (cb.found) {
        auto [b1, b2] = split_rect(b, cb);
        out = {a, b1, b2};
    } else {
        out = {a, b};
    }
    for (auto& r : out) r.mean = rect_mean(g, r);
    return out;
}

} // namespace ebm_detail

inline EbmModel fit_ebm(const Matrix& X, const std::vector<double>& y, const EbmSpec& spec) {
    const std::size_t n = X.rows, d = X.cols;
    if (n == 0) throw std::invalid_argument("fit_ebm: empty training set");
    if (n != y.size()) throw std::invalid_argument("fit_ebm: X/y length mismatch");
    if (n < 20) throw std::invalid_argument("fit_ebm: needs at least 20 training rows");
    if (spec.outer_bags < 1) throw std::invalid_argument("fit_ebm: outer_bags must be >= 1");
    if (spec.inner_bags != 0) throw std::invalid_argument("fit_ebm: inner_bags other than 0 is not supported");
    if (spec.max_interaction_bins > spec.max_bins)
        throw std::invalid_argument("fit_ebm: max_interaction_bins must be <= max_bins");
    if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0))
        throw std::invalid_argument("fit_ebm: validation_fraction must lie in (0,1)");

    EbmModel model;
    model.spec = spec;

    model.main_cuts.resize(d);
    model.pair_cuts.resize(d);
    for (std::size_t f = 0; f < d; ++f) {
        model.main_cuts[f] = quantile_cuts(X.column(f), spec.max_bins);
        model.pair_cuts[f] = quantile_cuts(X.column(f), spec.max_interaction_bins);
    }
    std::vector<std::vector<int>> main_bin(d, std::vector<int>(n));
    std::vector<std::vector<int>> pair_bin(d, std::vector<int>(n));
    for (std::size_t f = 0; f < d; ++f)
        for (std::size_t i = 0; i < n; ++i) {
            main_bin[f][i] = static_cast<int>(bin_of(model.main_cuts[f], X.at(i, f)));
            pair_bin[f][i] = static_cast<int>(bin_of(model.pair_cuts[f], X.at(i, f)));
        }

    const int n_bags = spec.outer_bags;
    struct BagState {
        std::vector<std::size_t> val_rows;
        std::vector<std::size_t> draws; // bootstrap multiset of boost rows
        std::vector<std::vector<double>> tables;
        double intercept = 0.0;
    };
    std::vector<BagState> bags(n_bags);

    // -------- per-bag main-effect boosting --------
    for (int b = 0; b < n_bags; ++b) {
        BagState& bag = bags[b];
        Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(b)));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        const std::size_t n_val =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(spec.validation_fraction * n)));
        bag.val_rows.assign(order.begin(), order.begin() + n_val);
        std::vector<std::size_t> rest(order.begin() + n_val, order.end());
        bag.draws.resize(rest.size());
        for (std::size_t t = 0; t < rest.size(); ++t) bag.draws[t] = rest[rng.below(rest.size())];

        bag.tables.assign(d, {});
        for (std::size_t f = 0; f < d; ++f) bag.tables[f].assign(model.main_bins(f), 0.0);

        double ysum = 0.0;
        for (std::size_t t : bag.draws) ysum += y[t];
        bag.intercept = ysum / static_cast<double>(bag.draws.size());

        std::vector<double> resid(bag.draws.size());
        for (std::size_t t = 0; t < bag.draws.size(); ++t) resid[t] = y[bag.draws[t]] - bag.intercept;

        auto val_mse = [&]() {
            double s = 0.0;
            for (std::size_t i : bag.val_rows) {
                double p = bag.intercept;
                for (std::size_t f = 0; f < d; ++f) p += bag.tables[f][main_bin[f][i]];
                s += (y[i] - p) * (y[i] - p);
            }
            return s / static_cast<double>(bag.val_rows.size());
        };

        double best_val = val_mse();
        auto best_tables = bag.tables;
        int stall = 0;
        for (int round = 0; round < spec.max_rounds; ++round) {
            for (std::size_t f = 0; f < d; ++f) {
                const std::size_t B = model.main_bins(f);
                if (B < 2) continue;
                std::vector<double> sums(B, 0.0), cnts(B, 0.0);
                for (std::size_t t = 0; t < bag.draws.size(); ++t) {
                    const int bb = main_bin[f][bag.draws[t]];
                    sums[bb] += resid[t];
                    cnts[bb] += 1.0;
                }
                const auto segs = ebm_detail::three_leaf_tree(sums, cnts);
                if (segs.empty()) continue;
                for (const auto& s : segs) {
                    const double delta = spec.learning_rate * s.mean;
                    for (int bb = s.lo; bb < s.hi; ++bb) bag.tables[f][bb] += delta;
                }
                for (std::size_t t = 0; t < bag.draws.size(); ++t) {
                    const int bb = main_bin[f][bag.draws[t]];
                    for (const auto& s : segs)
                        if (bb >= s.lo && bb < s.hi) {
                            resid[t] -= spec.learning_rate * s.mean;
                            break;
                        }
                }
            }
            const double v = val_mse();
            if (best_val - v > spec.early_stop_tol) {
                best_val = v;
                best_tables = bag.tables;
                stall = 0;
            } else if (++stall >= spec.early_stop_rounds) {
                break;
            }
        }
        bag.tables = std::move(best_tables);
    }

    // -------- average mains across bags --------
    model.main_tables.assign(d, {});
    model.intercept = 0.0;
    for (int b = 0; b < n_bags; ++b) model.intercept += bags[b].intercept;
    model.intercept /= n_bags;
    for (std::size_t f = 0; f < d; ++f) {
        model.main_tables[f].assign(model.main_bins(f), 0.0);
        for (int b = 0; b < n_bags; ++b)
            for (std::size_t k = 0; k < model.main_tables[f].size(); ++k)
                model.main_tables[f][k] += bags[b].tables[f][k] / n_bags;
    }

    // -------- FAST-style pair ranking on full-train residuals --------
    std::vector<std::pair<int, int>> selected;
    if (spec.n_interactions > 0 && d < 2) {
        model.warnings.push_back("interactions skipped: fewer than 2 features");
    } else if (spec.n_interactions > 0) {
        std::vector<double> resid_full(n);
        for (std::size_t i = 0; i < n; ++i) {
            double p = model.intercept;
            for (std::size_t f = 0; f < d; ++f) p += model.main_tables[f][main_bin[f][i]];
            resid_full[i] = y[i] - p;
        }
        double rmean = mean(resid_full);
        struct Scored {
            double score;
            int f1, f2;
        };
        std::vector<Scored> scored;
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t c = a + 1; c < d; ++c) {
                const std::size_t B1 = model.pair_bins(a), B2 = model.pair_bins(c);
                if (B1 < 2 || B2 < 2) continue;
                std::vector<double> s(B1 * B2, 0.0), cn(B1 * B2, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t cell = static_cast<std::size_t>(pair_bin[a][i]) * B2 + pair_bin[c][i];
                    s[cell] += resid_full[i];
                    cn[cell] += 1.0;
                }
                double between = 0.0;
                for (std::size_t k = 0; k < s.size(); ++k)
                    if (cn[k] > 0.0) between += s[k] * s[k] / cn[k];
                between -= static_cast<double>(n) * rmean * rmean;
                scored.push_back({between, static_cast<int>(a), static_cast<int>(c)});
            }
        }
        std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
        for (std::size_t k = 0; k < scored.size() && k < static_cast<std::size_t>(spec.n_interactions); ++k)
            selected.push_back({scored[k].f1, scored[k].f2});
    }

    // -------- per-bag pair boosting --------
    std::vector<std::vector<std::vector<double>>> bag_pair_tables(n_bags);
    if (!selected.empty()) {
        for (int b = 0; b < n_bags; ++b) {
            BagState& bag = bags[b];
            auto& ptabs = bag_pair_tables[b];
            ptabs.resize(selected.size());
            for (std::size_t p = 0; p < selected.size(); ++p)
                ptabs[p].assign(model.pair_bins(selected[p].first) * model.pair_bins(selected[p].second), 0.0);

            std::vector<double> resid(bag.draws.size());
            for (std::size_t t = 0; t < bag.draws.size(); ++t) {
                const std::size_t i = bag.draws[t];
                double p = bag.intercept;
                for (std::size_t f = 0; f < d; ++f) p += bag.tables[f][main_bin[f][i]];
                resid[t] = y[i] - p;
            }

            auto val_mse = [&]() {
                double s = 0.0;
                for (std::size_t i : bag.val_rows) {
                    double p = bag.intercept;
                    for (std::size_t f = 0; f < d; ++f) p += bag.tables[f][main_bin[f][i]];
                    for (std::size_t q = 0; q < selected.size(); ++q) {
                        const std::size_t B2 = model.pair_bins(selected[q].second);
                        p += ptabs[q][static_cast<std::size_t>(pair_bin[selected[q].first][i]) * B2 +
                                      pair_bin[selected[q].second][i]];
                    }
                    s += (y[i] - p) * (y[i] - p);
                }
                return s / static_cast<double>(bag.val_rows.size());
            };

            double best_val = val_mse();
            auto best_tabs = ptabs;
            int stall = 0;
            for (int round = 0; round < spec.max_rounds; ++round) {
                for (std::size_t q = 0; q < selected.size(); ++q) {
                    const auto [f1, f2] = selected[q];
                    ebm_detail::PairGrid grid;
                    grid.B1 = static_cast<int>(model.pair_bins(f1));
                    grid.B2 = static_cast<int>(model.pair_bins(f2));
                    grid.sums.assign(static_cast<std::size_t>(grid.B1) * grid.B2, 0.0);
                    grid.cnts.assign(static_cast<std::size_t>(grid.B1) * grid.B2, 0.0);
                    for (std::size_t t = 0; t < bag.draws.size(); ++t) {
                        const std::size_t i = bag.draws[t];
                        const std::size_t cell = static_cast<std::size_t>(pair_bin[f1][i]) * grid.B2 + pair_bin[f2][i];
                        grid.sums[cell] += resid[t];
                        grid.cnts[cell] += 1.0;
                    }
                    const auto rects = ebm_detail::three_leaf_rects(grid);
                    if (rects.empty()) continue;
                    for (const auto& r : rects) {
                        const double delta = spec.learning_rate * r.mean;
                        for (int i1 = r.l1; i1 < r.h1; ++i1)
                            for (int i2 = r.l2; i2 < r.h2; ++i2) ptabs[q][i1 * grid.B2 + i2] += delta;
                    }
                    for (std::size_t t = 0; t < bag.draws.size(); ++t) {
                        const std::size_t i = bag.draws[t];
                        const int i1 = pair_bin[f1][i], i2 = pair_bin[f2][i];
                        for (const auto& r : rects)
                            if (i1 >= r.l1 && i1 < r.h1 && i2 >= r.l2 && i2 < r.h2) {
                                resid[t] -= spec.learning_rate * r.mean;
                                break;
                            }
                    }
                }
                const double v = val_mse();
                if (best_val - v > spec.early_stop_tol) {
                    best_val = v;
                    best_tabs = ptabs;
                    stall = 0;
                } else if (++stall >= spec.early_stop_rounds) {
                    break;
                }
            }
            ptabs = std::move(best_tabs);
        }

        for (std::size_t q = 0; q < selected.size(); ++q) {
            EbmPairTerm term;
            term.f1 = selected[q].first;
            term.f2 = selected[q].second;
            term.table.assign(bag_pair_tables[0][q].size(), 0.0);
            for (int b = 0; b < n_bags; ++b)
                for (std::size_t k = 0; k < term.table.size(); ++k) term.table[k] += bag_pair_tables[b][q][k] / n_bags;
            model.pairs.push_back(std::move(term));
        }
    }

    // -------- training bin counts and term centering --------
    model.main_counts.assign(d, {});
    for (std::size_t f = 0; f < d; ++f) {
        model.main_counts[f].assign(model.main_bins(f), 0);
        for (std::size_t i = 0; i < n; ++i) model.main_counts[f][main_bin[f][i]] += 1;
        double wsum = 0.0;
        for (std::size_t k = 0; k < model.main_tables[f].size(); ++k)
            wsum += model.main_tables[f][k] * model.main_counts[f][k];
        const double shift = wsum / static_cast<double>(n);
        for (auto& t : model.main_tables[f]) t -= shift;
        model.intercept += shift;
    }
    model.pair_counts.resize(model.pairs.size());
    for (std::size_t q = 0; q < model.pairs.size(); ++q) {
        auto& term = model.pairs[q];
        const std::size_t B2 = model.pair_bins(term.f2);
        model.pair_counts[q].assign(term.table.size(), 0);
        for (std::size_t i = 0; i < n; ++i)
            model.pair_counts[q][static_cast<std::size_t>(pair_bin[term.f1][i]) * B2 + pair_bin[term.f2][i]] += 1;
        double wsum = 0.0;
        for (std::size_t k = 0; k < term.table.size(); ++k) wsum += term.table[k] * model.pair_counts[q][k];
        const double shift = wsum / static_cast<double>(n);
        for (auto& t : term.table) t -= shift;
        model.intercept += shift;
    }

    return model;
}

} // namespace rulxai
