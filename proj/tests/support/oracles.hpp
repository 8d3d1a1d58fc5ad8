#pragma once

// Independent reference implementations used as test oracles. These stay
// deliberately literal (textbook formulas, exhaustive enumeration, double
// loops) and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rulxai/common.hpp"
#include "rulxai/model.hpp"

namespace oracle {

// Textbook two-pass Pearson r.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    return cov / std::sqrt(vx * vy);
}

// Distance correlation straight from the definition: materialize both
// double-centered distance matrices.
inline double distance_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> A(n, std::vector<double>(n)), B(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            A[i][j] = std::abs(x[i] - x[j]);
            B[i][j] = std::abs(y[i] - y[j]);
        }
    auto center = [n](std::vector<std::vector<double>>& M) {
        std::vector<double> rm(n, 0.0), cm(n, 0.0);
        double gm = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                rm[i] += M[i][j] / n;
                cm[j] += M[i][j] / n;
                gm += M[i][j] / (double(n) * n);
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) M[i][j] = M[i][j] - rm[i] - cm[j] + gm;
    };
    center(A);
    center(B);
    double dxy = 0.0, dxx = 0.0, dyy = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            dxy += A[i][j] * B[i][j];
            dxx += A[i][j] * A[i][j];
            dyy += B[i][j] * B[i][j];
        }
    if (dxx <= 0.0 || dyy <= 0.0) return 0.0;
    return std::sqrt(dxy / std::sqrt(dxx * dyy));
}

struct Stump {
    int feature = -1;
    double threshold = 0.0;
    double left_value = 0.0, right_value = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

// Exhaustive best single split: every feature, every midpoint between
// consecutive distinct sorted values, SSE by direct two-pass computation.
inline Stump best_stump(const rulxai::Matrix& X, const std::vector<double>& y) {
    Stump best;
    for (std::size_t f = 0; f < X.cols; ++f) {
        std::vector<double> vals = X.column(f);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            const double thr = 0.5 * (vals[k] + vals[k + 1]);
            double ls = 0.0, rs = 0.0;
            std::size_t ln = 0, rn = 0;
            for (std::size_t i = 0; i < X.rows; ++i)
                (X.at(i, f) <= thr ? (ls += y[i], ++ln) : (rs += y[i], ++rn));
            if (ln == 0 || rn == 0) continue;
            const double lm = ls / ln, rm = rs / rn;
            double sse = 0.0;
            for (std::size_t i = 0; i < X.rows; ++i) {
                const double p = X.at(i, f) <= thr ? lm : rm;
                sse += (y[i] - p) * (y[i] - p);
            }
            if (sse < best.sse) {
                best = {static_cast<int>(f), thr, lm, rm, sse};
            }
        }
    }
    return best;
}

// Literal ALE definition with its own quantile-edge computation.
inline void naive_ale(const rulxai::FittedModel& model, const rulxai::Matrix& Xtrain, std::size_t f, int num_bins,
                      std::vector<double>& grid_out, std::vector<double>& values_out) {
    std::vector<double> col(Xtrain.rows);
    for (std::size_t i = 0; i < Xtrain.rows; ++i) col[i] = Xtrain.at(i, f);
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    auto quant = [&](double q) {
        const double h = q * (sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] * (1.0 - (h - lo)) + sorted[hi] * (h - lo);
    };
    std::vector<double> edges{sorted.front()};
    for (int k = 1; k <= num_bins; ++k) {
        const double e = quant(static_cast<double>(k) / num_bins);
        if (e > edges.back()) edges.push_back(e);
    }
    const std::size_t K = edges.size() - 1;

    std::vector<double> deltas(K, 0.0);
    std::vector<int> counts(K, 0);
    std::vector<double> probe(Xtrain.cols);
    for (std::size_t i = 0; i < Xtrain.rows; ++i) {
        std::size_t k = 0;
        while (k + 1 < K && col[i] > edges[k + 1]) ++k;
        std::copy(Xtrain.row(i), Xtrain.row(i) + Xtrain.cols, probe.begin());
        probe[f] = edges[k + 1];
        const double hi = model.predict_row(probe.data());
        probe[f] = edges[k];
        const double lo = model.predict_row(probe.data());
        deltas[k] += hi - lo;
        counts[k] += 1;
    }
    for (std::size_t k = 0; k < K; ++k)
        if (counts[k] > 0) deltas[k] /= counts[k];

    values_out.assign(K + 1, 0.0);
    for (std::size_t k = 0; k < K; ++k) values_out[k + 1] = values_out[k] + deltas[k];
    double center = 0.0;
    for (std::size_t k = 0; k < K; ++k) center += counts[k] * values_out[k + 1];
    center /= static_cast<double>(Xtrain.rows);
    for (auto& v : values_out) v -= center;
    grid_out = edges;
}

inline std::vector<double> tree_leaf_values(const rulxai::DecisionTree& t) {
    std::vector<double> out;
    for (const auto& nd : t.nodes)
        if (nd.is_leaf()) out.push_back(nd.value);
    return out;
}

} // namespace oracle
