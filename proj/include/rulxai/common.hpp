#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rulxai {

// Dense row-major matrix of doubles. Small by design; the pipelines here
// work on hundreds-of-rows tabular data.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

    const double* row(std::size_t i) const { return v.data() + i * cols; }
    double* row(std::size_t i) { return v.data() + i * cols; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows);
        for (std::size_t i = 0; i < rows; ++i) out[i] = at(i, j);
        return out;
    }

    Matrix gather_rows(const std::vector<std::size_t>& idx) const {
        Matrix out(idx.size(), cols);
        for (std::size_t i = 0; i < idx.size(); ++i)
            std::copy(row(idx[i]), row(idx[i]) + cols, out.row(i));
        return out;
    }
};

inline double mean(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double t : x) s += t;
    return s / static_cast<double>(x.size());
}

// Population variance.
inline double variance(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double t : x) s += (t - m) * (t - m);
    return s / static_cast<double>(x.size());
}

inline double stddev(const std::vector<double>& x) { return std::sqrt(variance(x)); }

inline bool is_constant(const std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] != x[0]) return false;
    return true;
}

// Sample Pearson correlation; 0 when either side has zero variance (exact
// constancy check, so identical values never yield roundoff correlations).
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (n < 2) return 0.0;
    if (is_constant(x) || is_constant(y)) return 0.0;
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

inline double mse(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.size() != pred.size()) throw std::invalid_argument("mse: length mismatch");
    if (truth.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double r = truth[i] - pred[i];
        s += r * r;
    }
    return s / static_cast<double>(truth.size());
}

inline double mae(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.size() != pred.size()) throw std::invalid_argument("mae: length mismatch");
    if (truth.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - pred[i]);
    return s / static_cast<double>(truth.size());
}

// R^2 about the target's own mean. NaN when the target has zero variance.
inline double r_squared(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.size() != pred.size()) throw std::invalid_argument("r_squared: length mismatch");
    const double m = mean(truth);
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        sse += (truth[i] - pred[i]) * (truth[i] - pred[i]);
        sst += (truth[i] - m) * (truth[i] - m);
    }
    if (sst <= 0.0) return std::nan("");
    return 1.0 - sse / sst;
}

// Stable argsort, ascending.
inline std::vector<std::size_t> argsort(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    return idx;
}

// Linear-interpolation quantile (the numpy default) on sorted input, q in [0,1].
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty vector");
    if (sorted.size() == 1) return sorted[0];
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Deduplicated interior quantile cut points for `bins` equal-frequency bins.
// A value x belongs to bin upper_bound(cuts, x); out-of-range values clamp
// to the edge bins by construction.
inline std::vector<double> quantile_cuts(std::vector<double> values, int bins) {
    if (bins < 1) throw std::invalid_argument("quantile_cuts: bins must be >= 1");
    std::sort(values.begin(), values.end());
    std::vector<double> cuts;
    for (int k = 1; k < bins; ++k) {
        const double c = quantile_sorted(values, static_cast<double>(k) / bins);
        // strictly above the minimum so the first bin is never empty
        if (c > values.front() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
    }
    return cuts;
}

inline std::size_t bin_of(const std::vector<double>& cuts, double x) {
    return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

// Cholesky factorization of a symmetric positive definite matrix, kept for
// repeated solves against many right-hand sides.
class CholeskyFactor {
public:
    bool factor(std::vector<double> a, std::size_t n) {
        n_ = n;
        for (std::size_t j = 0; j < n; ++j) {
            double d = a[j * n + j];
            for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
            if (!(d > 0.0) || !std::isfinite(d)) return false;
            const double l = std::sqrt(d);
            a[j * n + j] = l;
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = a[i * n + j];
                for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
                a[i * n + j] = s / l;
            }
        }
        l_ = std::move(a);
        return true;
    }

    std::vector<double> solve(std::vector<double> b) const {
        for (std::size_t i = 0; i < n_; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= l_[i * n_ + k] * b[k];
            b[i] = s / l_[i * n_ + i];
        }
        for (std::size_t ii = n_; ii-- > 0;) {
            double s = b[ii];
            for (std::size_t k = ii + 1; k < n_; ++k) s -= l_[k * n_ + ii] * b[k];
            b[ii] = s / l_[ii * n_ + ii];
        }
        return b;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> l_;
};

// Solves A x = b for symmetric positive definite A (row-major n x n) by
// Cholesky decomposition. Returns false if A is not positive definite.
inline bool cholesky_solve(std::vector<double> a, std::size_t n, std::vector<double> b,
                           std::vector<double>& x) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    // forward: L z = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    // backward: L^T x = z
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * x[k];
        x[ii] = s / a[ii * n + ii];
    }
    return true;
}

} // namespace rulxai
