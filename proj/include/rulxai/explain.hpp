#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulxai/common.hpp"
#include "rulxai/dataset.hpp"
#include "rulxai/feature_select.hpp"
#include "rulxai/model.hpp"
#include "rulxai/rng.hpp"

namespace rulxai {

struct Attribution {
    std::string method;
    long long sample_index = -1;
    double base_value = 0.0;
    std::vector<std::pair<std::string, double>> per_feature;
    nlohmann::json metadata = nlohmann::json::object();
};

struct CurveSeries {
    std::string feature;
    std::string kind; // pdp | ale | shape | robustness | resilience
    std::vector<double> grid;
    std::vector<double> values;
};

// Mean metric degradation over seeded within-column shuffles on the test
// split; negatives are kept.
inline FeatureScoreTable permutation_importance(const FittedModel& model, const TabularDataset& ds,
                                                int repeats = 10, std::uint64_t seed = 0) {
    if (repeats < 1) throw std::invalid_argument("permutation_importance: repeats must be >= 1");
    const auto te = ds.test_indices();
    if (te.empty()) throw std::invalid_argument("permutation_importance: empty test split");

    const Matrix Xt = ds.x_test();
    const auto yt = ds.y_test();
    const double baseline = mse(yt, model.predict(Xt));

    FeatureScoreTable t;
    t.feature_names = ds.feature_names;
    t.method = "permutation_importance";
    t.metadata = {{"metric", "mse"}, {"repeats", repeats}, {"seed", seed}, {"baseline_mse", baseline}};
    for (std::size_t f = 0; f < ds.d(); ++f) {
        double acc = 0.0;
        for (int r = 0; r < repeats; ++r) {
            Rng rng(mix_seed(seed, f * static_cast<std::size_t>(repeats) + r));
            std::vector<double> col = Xt.column(f);
            rng.shuffle(col);
            Matrix Xp = Xt;
            for (std::size_t i = 0; i < Xp.rows; ++i) Xp.at(i, f) = col[i];
            acc += mse(yt, model.predict(Xp));
        }
        t.scores.push_back(acc / repeats - baseline);
    }
    return t;
}

// Marginal-average effect curve on an equally spaced grid spanning the
// training range (sorted unique values when fewer than grid_size).
inline CurveSeries partial_dependence(const FittedModel& model, const TabularDataset& ds,
                                      const std::string& feature, int grid_size = 100) {
    if (grid_size < 2) throw std::invalid_argument("partial_dependence: grid_size must be >= 2");
    const std::size_t f = ds.feature_index(feature);
    const Matrix Xt = ds.x_train();

    std::vector<double> uniq = Xt.column(f);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    CurveSeries c;
    c.feature = feature;
    c.kind = "pdp";
    if (uniq.size() <= static_cast<std::size_t>(grid_size)) {
        c.grid = uniq;
    } else {
        const double lo = uniq.front(), hi = uniq.back();
        for (int k = 0; k < grid_size; ++k)
            c.grid.push_back(lo + (hi - lo) * static_cast<double>(k) / (grid_size - 1));
    }
    Matrix work = Xt;
    for (double g : c.grid) {
        for (std::size_t i = 0; i < work.rows; ++i) work.at(i, f) = g;
        c.values.push_back(mean(model.predict(work)));
    }
    return c;
}

// Accumulated local effects over quantile bins of the training data,
// centered to data-weighted mean zero.
inline CurveSeries accumulated_local_effects(const FittedModel& model, const TabularDataset& ds,
                                             const std::string& feature, int num_bins = 10) {
    if (num_bins < 1) throw std::invalid_argument("accumulated_local_effects: num_bins must be >= 1");
    const std::size_t f = ds.feature_index(feature);
    const Matrix Xt = ds.x_train();
    std::vector<double> col = Xt.column(f);
    if (is_constant(col)) throw std::invalid_argument("accumulated_local_effects: feature '" + feature + "' is constant");

    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges{sorted.front()};
    for (int k = 1; k <= num_bins; ++k) {
        const double e = quantile_sorted(sorted, static_cast<double>(k) / num_bins);
        if (e > edges.back()) edges.push_back(e);
    }
    const std::size_t K = edges.size() - 1; // actual bins after dedupe
    if (K < 1) throw std::invalid_argument("accumulated_local_effects: feature '" + feature + "' is constant");

    // rows in bin k: (edges[k], edges[k+1]], bin 0 also takes the minimum
    std::vector<std::vector<std::size_t>> rows(K);
    for (std::size_t i = 0; i < Xt.rows; ++i) {
        const double x = col[i];
        std::size_t k = 0;
        while (k + 1 < K && x > edges[k + 1]) ++k;
        rows[k].push_back(i);
    }

    Matrix work = Xt;
    std::vector<double> delta(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        if (rows[k].empty()) continue;
        double acc = 0.0;
        for (std::size_t i : rows[k]) {
            std::copy(Xt.row(i), Xt.row(i) + Xt.cols, work.row(0));
            work.at(0, f) = edges[k + 1];
            double hi = model.predict_row(work.row(0));
            work.at(0, f) = edges[k];
            double lo = model.predict_row(work.row(0));
            acc += hi - lo;
        }
        delta[k] = acc / static_cast<double>(rows[k].size());
    }

    CurveSeries c;
    c.feature = feature;
    c.kind = "ale";
    c.grid = edges;
    c.values.assign(K + 1, 0.0);
    for (std::size_t k = 0; k < K; ++k) c.values[k + 1] = c.values[k] + delta[k];
    double center = 0.0;
    for (std::size_t k = 0; k < K; ++k) center += static_cast<double>(rows[k].size()) * c.values[k + 1];
    center /= static_cast<double>(Xt.rows);
    for (auto& v : c.values) v -= center;
    return c;
}

// Weighted linear surrogate around one sample: Gaussian perturbations
// scaled by per-feature training std, exponential kernel in standardized
// units, weighted least squares with intercept.
inline Attribution lime_explain(const FittedModel& model, const TabularDataset& ds, std::size_t sample_index,
                                int num_samples = 1000, double kernel_width = 0.0, int top_k = 10,
                                std::uint64_t seed = 0) {
    const std::size_t d = ds.d();
    if (sample_index >= ds.n()) throw std::invalid_argument("lime_explain: sample index out of range");
    if (num_samples < static_cast<int>(d) + 2)
        throw std::invalid_argument("lime_explain: num_samples must be at least d + 2");
    if (kernel_width <= 0.0) kernel_width = 0.75 * std::sqrt(static_cast<double>(d));

    const Matrix Xt = ds.x_train();
    std::vector<double> sigma(d);
    for (std::size_t j = 0; j < d; ++j) {
        const auto col = Xt.column(j);
        sigma[j] = is_constant(col) ? 0.0 : stddev(col);
    }
    const double* x0 = ds.X.row(sample_index);

    Rng rng(seed);
    Matrix Z(static_cast<std::size_t>(num_samples), d);
    std::vector<double> w(static_cast<std::size_t>(num_samples));
    for (std::size_t s = 0; s < Z.rows; ++s) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double eps = sigma[j] > 0.0 ? sigma[j] * rng.gaussian() : 0.0;
            Z.at(s, j) = x0[j] + eps;
            if (sigma[j] > 0.0) dist2 += (eps / sigma[j]) * (eps / sigma[j]);
        }
        w[s] = std::exp(-dist2 / (kernel_width * kernel_width));
    }
    const std::vector<double> fz = model.predict(Z);

    // weighted least squares over intercept + non-constant features
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < d; ++j)
        if (sigma[j] > 0.0) active.push_back(j);
    const std::size_t p = active.size() + 1;
    std::vector<double> ata(p * p, 0.0), atb(p, 0.0);
    double wsum = 0.0;
    for (std::size_t s = 0; s < Z.rows; ++s) {
        wsum += w[s];
        std::vector<double> rowv(p, 1.0);
        for (std::size_t a = 0; a < active.size(); ++a) rowv[a + 1] = Z.at(s, active[a]);
        for (std::size_t a = 0; a < p; ++a) {
            atb[a] += w[s] * rowv[a] * fz[s];
            for (std::size_t b = a; b < p; ++b) ata[a * p + b] += w[s] * rowv[a] * rowv[b];
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) ata[a * p + b] = ata[b * p + a];

    std::vector<double> beta;
    if (wsum <= 1e-300 || !cholesky_solve(ata, p, atb, beta))
        throw std::runtime_error("lime_explain: singular weighted design; increase kernel_width");

    std::vector<double> coef(d, 0.0);
    for (std::size_t a = 0; a < active.size(); ++a) coef[active[a]] = beta[a + 1];

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(coef[a]) > std::abs(coef[b]); });

    Attribution att;
    att.method = "lime";
    att.sample_index = static_cast<long long>(sample_index);
    att.base_value = beta[0];
    for (std::size_t k = 0; k < order.size() && k < static_cast<std::size_t>(top_k); ++k)
        att.per_feature.push_back({ds.feature_names[order[k]], coef[order[k]]});
    att.metadata = {{"kernel_width", kernel_width}, {"num_samples", num_samples}, {"seed", seed}, {"top_k", top_k}};
    return att;
}

// Training rows capped to `cap` seeded samples, the default SHAP background.
inline Matrix shapley_background(const TabularDataset& ds, std::size_t cap = 100, std::uint64_t seed = 0) {
    auto tr = ds.train_indices();
    if (tr.size() > cap) {
        Rng rng(mix_seed(seed, 0x5ba9));
        rng.shuffle(tr);
        tr.resize(cap);
        std::sort(tr.begin(), tr.end());
    }
    return ds.X.gather_rows(tr);
}

// Interventional Shapley values by full subset enumeration:
// v(S) = mean over background rows b of f(x_S, b_rest).
inline Attribution shapley_exact(const FittedModel& model, const TabularDataset& ds, std::size_t sample_index,
                                 const Matrix& background, int max_features = 15) {
    const std::size_t d = ds.d();
    if (sample_index >= ds.n()) throw std::invalid_argument("shapley_exact: sample index out of range");
    if (d > static_cast<std::size_t>(max_features))
        throw std::invalid_argument("shapley_exact: " + std::to_string(d) + " features exceed the exact-enumeration cap of " +
                                    std::to_string(max_features) + "; select a smaller feature set first");
    if (background.rows == 0) throw std::invalid_argument("shapley_exact: background must be non-empty");

    const double* x0 = ds.X.row(sample_index);
    const std::size_t n_masks = std::size_t{1} << d;
    std::vector<double> v(n_masks);

    Matrix hyb = background;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        for (std::size_t i = 0; i < background.rows; ++i)
            for (std::size_t j = 0; j < d; ++j)
                hyb.at(i, j) = (mask >> j) & 1 ? x0[j] : background.at(i, j);
        v[mask] = mean(model.predict(hyb));
    }

    std::vector<double> fact(d + 1, 1.0);
    for (std::size_t k = 1; k <= d; ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
    std::vector<double> weight(d); // w(s) = s!(d-1-s)!/d!
    for (std::size_t s = 0; s < d; ++s) weight[s] = fact[s] * fact[d - 1 - s] / fact[d];

    Attribution att;
    att.method = "shapley";
    att.sample_index = static_cast<long long>(sample_index);
    att.base_value = v[0];
    for (std::size_t j = 0; j < d; ++j) {
        double phi = 0.0;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if ((mask >> j) & 1) continue;
            const std::size_t s = static_cast<std::size_t>(std::popcount(mask));
            phi += weight[s] * (v[mask | (std::size_t{1} << j)] - v[mask]);
        }
        att.per_feature.push_back({ds.feature_names[j], phi});
    }
    att.metadata = {{"background_rows", background.rows}, {"max_features", max_features}};
    return att;
}

// ---- serialization ----

inline nlohmann::json attribution_json(const Attribution& a) {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& [name, value] : a.per_feature) feats.push_back({{"name", name}, {"value", value}});
    return nlohmann::json{{"method", a.method},
                          {"sample_index", a.sample_index},
                          {"base_value", a.base_value},
                          {"features", feats},
                          {"metadata", a.metadata}};
}

inline std::string attribution_csv(const Attribution& a) {
    std::string out = "feature,value\n";
    char buf[64];
    for (const auto& [name, value] : a.per_feature) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        out += name + "," + buf + "\n";
    }
    return out;
}

inline nlohmann::json curve_json(const CurveSeries& c) {
    return nlohmann::json{{"feature", c.feature}, {"kind", c.kind}, {"grid", c.grid}, {"values", c.values}};
}

inline std::string curve_csv(const CurveSeries& c) {
    std::string out = "grid,value\n";
    char b1[64], b2[64];
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        std::snprintf(b1, sizeof(b1), "%.17g", c.grid[i]);
        std::snprintf(b2, sizeof(b2), "%.17g", c.values[i]);
        out += std::string(b1) + "," + b2 + "\n";
    }
    return out;
}

} // namespace rulxai
