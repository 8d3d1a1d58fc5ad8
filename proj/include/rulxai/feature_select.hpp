#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulxai/common.hpp"
#include "rulxai/dataset.hpp"
#include "rulxai/rng.hpp"
#include "rulxai/tree.hpp"

namespace rulxai {

struct FeatureScoreTable {
    std::vector<std::string> feature_names;
    std::vector<double> scores;
    std::string method;
    double threshold = 0.0;
    std::vector<double> p_values; // rcit only
    nlohmann::json metadata = nlohmann::json::object();
};

// Per-feature sample Pearson r against the target, training split only.
// Zero-variance features score 0.
inline FeatureScoreTable pearson_scores(const TabularDataset& ds) {
    const auto tr = ds.train_indices();
    if (tr.size() < 2) throw std::invalid_argument("pearson_scores: needs at least 2 training rows");
    FeatureScoreTable t;
    t.feature_names = ds.feature_names;
    t.method = "pearson";
    const auto yt = ds.y_at(tr);
    for (std::size_t j = 0; j < ds.d(); ++j) {
        std::vector<double> col(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) col[i] = ds.X.at(tr[i], j);
        t.scores.push_back(pearson(col, yt));
    }
    return t;
}

namespace fs_detail {

// Szekely distance correlation between two scalar samples, via
// double-centered pairwise distance matrices. O(n^2).
inline double distance_correlation_xy(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    auto centered = [n](const std::vector<double>& v) {
        std::vector<double> d(n * n);
        std::vector<double> row_mean(n, 0.0);
        double grand = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                d[i * n + j] = std::abs(v[i] - v[j]);
                row_mean[i] += d[i * n + j];
            }
        for (std::size_t i = 0; i < n; ++i) {
            row_mean[i] /= static_cast<double>(n);
            grand += row_mean[i];
        }
        grand /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i * n + j] += grand - row_mean[i] - row_mean[j];
        return d;
    };
    const auto A = centered(x), B = centered(y);
    double vxy = 0.0, vxx = 0.0, vyy = 0.0;
    for (std::size_t k = 0; k < A.size(); ++k) {
        vxy += A[k] * B[k];
        vxx += A[k] * A[k];
        vyy += B[k] * B[k];
    }
    if (vxx <= 0.0 || vyy <= 0.0) return 0.0;
    const double r2 = vxy / std::sqrt(vxx * vyy);
    return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

} // namespace fs_detail

inline FeatureScoreTable distance_correlation(const TabularDataset& ds) {
    const auto tr = ds.train_indices();
    if (tr.size() < 2) throw std::invalid_argument("distance_correlation: needs at least 2 training rows");
    FeatureScoreTable t;
    t.feature_names = ds.feature_names;
    t.method = "distance_corr";
    const auto yt = ds.y_at(tr);
    for (std::size_t j = 0; j < ds.d(); ++j) {
        std::vector<double> col(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) col[i] = ds.X.at(tr[i], j);
        t.scores.push_back(fs_detail::distance_correlation_xy(col, yt));
    }
    return t;
}

// Total split gain per feature from an in-house least-squares GBDT,
// normalized to sum 1 when any split exists.
inline FeatureScoreTable gbdt_importance(const TabularDataset& ds, int num_trees = 100, int max_depth = 3,
                                         double learning_rate = 0.1, std::uint64_t seed = 0) {
    const auto tr = ds.train_indices();
    if (tr.size() < 10) throw std::invalid_argument("gbdt_importance: needs at least 10 training rows");
    FeatureScoreTable t;
    t.feature_names = ds.feature_names;
    t.method = "gbdt_importance";
    t.metadata = {{"num_trees", num_trees}, {"max_depth", max_depth}, {"learning_rate", learning_rate}, {"seed", seed}};
    t.scores.assign(ds.d(), 0.0);

    const Matrix Xt = ds.x_train();
    std::vector<double> resid = ds.y_train();
    const double base = mean(resid);
    for (auto& r : resid) r -= base;

    TreeSpec node_spec;
    node_spec.max_depth = max_depth;
    node_spec.min_samples_leaf = 1;
    for (int k = 0; k < num_trees; ++k) {
        const DecisionTree stage = fit_decision_tree(Xt, resid, node_spec);
        bool any_split = false;
        for (const auto& nd : stage.nodes)
            if (!nd.is_leaf()) {
                t.scores[static_cast<std::size_t>(nd.feature)] += nd.gain;
                any_split = true;
            }
        if (!any_split) break;
        for (std::size_t i = 0; i < Xt.rows; ++i) resid[i] -= learning_rate * stage.predict_row(Xt.row(i));
    }
    double total = 0.0;
    for (double s : t.scores) total += s;
    if (total > 0.0)
        for (auto& s : t.scores) s /= total;
    return t;
}

struct RcitConfig {
    int num_fourier_features = 100;
    double alpha = 0.01;
    int num_permutations = 200;
    std::uint64_t seed = 0;
    std::string initialization = "none"; // none | feature_importance
};

namespace fs_detail {

// Random Fourier feature map with Gaussian kernel, median-heuristic
// bandwidth; output columns are mean-centered.
inline Matrix rff_map(const Matrix& U, int k, Rng& rng) {
    const std::size_t n = U.rows, p = U.cols;
    double bw;
    {
        std::vector<double> dists;
        dists.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < p; ++c) {
                    const double d = U.at(i, c) - U.at(j, c);
                    s += d * d;
                }
                dists.push_back(std::sqrt(s));
            }
        std::sort(dists.begin(), dists.end());
        bw = dists.empty() ? 1.0 : quantile_sorted(dists, 0.5);
        if (bw <= 0.0) bw = 1.0;
    }
    Matrix Wf(static_cast<std::size_t>(k), p);
    std::vector<double> bias(static_cast<std::size_t>(k));
    for (auto& w : Wf.v) w = rng.gaussian() / bw;
    for (auto& bb : bias) bb = rng.uniform(0.0, 6.283185307179586476925286766559);
    Matrix Phi(n, static_cast<std::size_t>(k));
    const double scale = std::sqrt(2.0 / static_cast<double>(k));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
            double z = bias[f];
            for (std::size_t c = 0; c < p; ++c) z += Wf.at(f, c) * U.at(i, c);
            Phi.at(i, f) = scale * std::cos(z);
        }
    for (std::size_t f = 0; f < Phi.cols; ++f) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += Phi.at(i, f);
        m /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) Phi.at(i, f) -= m;
    }
    return Phi;
}

// Residualizes Phi on Phi_z by ridge regression (in place).
inline void ridge_residualize(Matrix& Phi, const Matrix& Phi_z, double ridge) {
    if (Phi_z.cols == 0) return;
    const std::size_t n = Phi.rows, kz = Phi_z.cols;
    std::vector<double> gram(kz * kz, 0.0);
    for (std::size_t a = 0; a < kz; ++a)
        for (std::size_t b = a; b < kz; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += Phi_z.at(i, a) * Phi_z.at(i, b);
            gram[a * kz + b] = gram[b * kz + a] = s + (a == b ? ridge : 0.0);
        }
    CholeskyFactor chol;
    if (!chol.factor(gram, kz)) return; // ridge keeps this SPD in practice
    for (std::size_t col = 0; col < Phi.cols; ++col) {
        std::vector<double> rhs(kz, 0.0);
        for (std::size_t a = 0; a < kz; ++a) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += Phi_z.at(i, a) * Phi.at(i, col);
            rhs[a] = s;
        }
        const auto beta = chol.solve(rhs);
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t a = 0; a < kz; ++a) fit += Phi_z.at(i, a) * beta[a];
            Phi.at(i, col) -= fit;
        }
    }
}

} // namespace fs_detail

// Randomized conditional-independence test: residualized random-Fourier
// cross-covariance statistic with a permutation p-value. Score = 1 - p.
inline FeatureScoreTable rcit_dependence(const TabularDataset& ds, const RcitConfig& cfg) {
    const auto tr = ds.train_indices();
    if (tr.size() < 20) throw std::invalid_argument("rcit_dependence: needs at least 20 training rows");
    if (cfg.num_fourier_features < 1) throw std::invalid_argument("rcit_dependence: num_fourier_features must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("rcit_dependence: alpha must lie in (0,1)");
    if (cfg.initialization != "none" && cfg.initialization != "feature_importance")
        throw std::invalid_argument("rcit_dependence: unknown initialization '" + cfg.initialization + "'");

    const std::size_t n = tr.size(), d = ds.d();
    const double ridge = 1e-3;

    std::vector<double> importance_rank(d, 0.0);
    if (cfg.initialization == "feature_importance") {
        const auto imp = gbdt_importance(ds, 100, 3, 0.1, cfg.seed);
        importance_rank = imp.scores;
    }

    FeatureScoreTable t;
    t.feature_names = ds.feature_names;
    t.method = "rcit_dependence";
    t.threshold = cfg.alpha;
    t.metadata = {{"num_fourier_features", cfg.num_fourier_features},
                  {"alpha", cfg.alpha},
                  {"num_permutations", cfg.num_permutations},
                  {"seed", cfg.seed},
                  {"initialization", cfg.initialization},
                  {"bandwidth", "median pairwise distance"},
                  {"ridge", ridge}};

    const auto yt = ds.y_at(tr);
    Matrix ymat(n, 1);
    for (std::size_t i = 0; i < n; ++i) ymat.at(i, 0) = yt[i];

    for (std::size_t j = 0; j < d; ++j) {
        std::vector<std::size_t> zcols;
        for (std::size_t c = 0; c < d; ++c) {
            if (c == j) continue;
            if (cfg.initialization == "none" || importance_rank[c] > importance_rank[j]) zcols.push_back(c);
        }

        Matrix xmat(n, 1);
        for (std::size_t i = 0; i < n; ++i) xmat.at(i, 0) = ds.X.at(tr[i], j);
        Matrix zmat(n, zcols.size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < zcols.size(); ++c) zmat.at(i, c) = ds.X.at(tr[i], zcols[c]);

        Rng rng_x(mix_seed(cfg.seed, j * 4 + 0));
        Rng rng_y(mix_seed(cfg.seed, j * 4 + 1));
        Rng rng_z(mix_seed(cfg.seed, j * 4 + 2));
        Rng rng_perm(mix_seed(cfg.seed, j * 4 + 3));

        Matrix Phi_x = fs_detail::rff_map(xmat, cfg.num_fourier_features, rng_x);
        Matrix Phi_y = fs_detail::rff_map(ymat, cfg.num_fourier_features, rng_y);
        if (!zcols.empty()) {
            const Matrix Phi_z = fs_detail::rff_map(zmat, cfg.num_fourier_features, rng_z);
            fs_detail::ridge_residualize(Phi_x, Phi_z, ridge);
            fs_detail::ridge_residualize(Phi_y, Phi_z, ridge);
        }

        // Gram matrices let each permutation cost O(n^2):
        // ||Rx^T Ry||_F^2 = sum_ij (Rx Rx^T)_ij (Ry Ry^T)_ij
        auto gram = [n](const Matrix& R) {
            Matrix G(n, n);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a; b < n; ++b) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < R.cols; ++c) s += R.at(a, c) * R.at(b, c);
                    G.at(a, b) = G.at(b, a) = s;
                }
            return G;
        };
        const Matrix Gx = gram(Phi_x), Gy = gram(Phi_y);
        const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));

        double t_obs = 0.0;
        for (std::size_t k = 0; k < Gx.v.size(); ++k) t_obs += Gx.v[k] * Gy.v[k];
        t_obs *= inv_n2;

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        int ge = 0;
        for (int p = 0; p < cfg.num_permutations; ++p) {
            rng_perm.shuffle(perm);
            double stat = 0.0;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) stat += Gx.at(perm[a], perm[b]) * Gy.at(a, b);
            stat *= inv_n2;
            if (stat >= t_obs) ++ge;
        }
        const double pval = (1.0 + ge) / (1.0 + cfg.num_permutations);
        t.p_values.push_back(pval);
        t.scores.push_back(1.0 - pval);
    }
    return t;
}

// Features with |score| > threshold, strongest first; ties resolved by
// ascending feature index.
inline std::vector<std::string> select_features(const FeatureScoreTable& scores, double threshold) {
    if (!std::isfinite(threshold)) throw std::invalid_argument("select_features: threshold must be finite");
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < scores.scores.size(); ++j)
        if (std::abs(scores.scores[j]) > threshold) idx.push_back(j);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(scores.scores[a]) > std::abs(scores.scores[b]);
    });
    std::vector<std::string> out;
    for (std::size_t j : idx) out.push_back(scores.feature_names[j]);
    return out;
}

struct EdaSummary {
    std::vector<std::string> names; // features then "RUL"
    std::vector<std::vector<double>> hist_edges;
    std::vector<std::vector<int>> hist_counts;
    std::vector<std::pair<double, double>> cycle_rul;
    Matrix correlation; // symmetric; zero-variance rows/cols zeroed off-diagonal
};

inline EdaSummary eda_summary(const TabularDataset& ds) {
    EdaSummary s;
    s.names = ds.feature_names;
    s.names.push_back("RUL");
    const std::size_t n = ds.n(), m = s.names.size();

    std::vector<std::vector<double>> cols(m);
    for (std::size_t j = 0; j + 1 < m; ++j) cols[j] = ds.X.column(j);
    cols[m - 1] = ds.y;

    const int bins = 20;
    for (std::size_t j = 0; j < m; ++j) {
        const auto& c = cols[j];
        double lo = c[0], hi = c[0];
        for (double v : c) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        std::vector<double> edges(bins + 1);
        const double width = (hi - lo) / bins;
        for (int k = 0; k <= bins; ++k) edges[k] = lo + width * k;
        std::vector<int> counts(bins, 0);
        for (double v : c) {
            int k = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
            k = std::clamp(k, 0, bins - 1);
            counts[k] += 1;
        }
        s.hist_edges.push_back(std::move(edges));
        s.hist_counts.push_back(std::move(counts));
    }

    const std::size_t cyc = ds.feature_index("cycle");
    for (std::size_t i = 0; i < n; ++i) s.cycle_rul.push_back({ds.X.at(i, cyc), ds.y[i]});

    s.correlation = Matrix(m, m);
    std::vector<bool> constant(m);
    for (std::size_t j = 0; j < m; ++j) constant[j] = is_constant(cols[j]);
    for (std::size_t a = 0; a < m; ++a) {
        s.correlation.at(a, a) = constant[a] ? 0.0 : 1.0;
        for (std::size_t b = a + 1; b < m; ++b) {
            const double r = (constant[a] || constant[b]) ? 0.0 : pearson(cols[a], cols[b]);
            s.correlation.at(a, b) = r;
            s.correlation.at(b, a) = r;
        }
    }
    return s;
}

// ---- serialization ----

inline std::string score_table_csv(const FeatureScoreTable& t) {
    std::string out = "feature,score,method\n";
    char buf[64];
    for (std::size_t j = 0; j < t.feature_names.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.scores[j]);
        out += t.feature_names[j] + "," + buf + "," + t.method + "\n";
    }
    return out;
}

inline nlohmann::json score_table_json(const FeatureScoreTable& t) {
    nlohmann::json j{{"method", t.method},
                     {"feature_names", t.feature_names},
                     {"scores", t.scores},
                     {"threshold", t.threshold},
                     {"metadata", t.metadata}};
    if (!t.p_values.empty()) j["p_values"] = t.p_values;
    return j;
}

inline nlohmann::json heatmap_json(const EdaSummary& s) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t a = 0; a < s.correlation.rows; ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t b = 0; b < s.correlation.cols; ++b) row.push_back(s.correlation.at(a, b));
        rows.push_back(row);
    }
    return nlohmann::json{{"labels", s.names}, {"matrix", rows}};
}

} // namespace rulxai
