#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rulxai/common.hpp"
#include "rulxai/rng.hpp"

namespace rulxai {

struct ReluDnnSpec {
    std::vector<int> layer_sizes{40, 40};
    int max_epochs = 1000;
    double learning_rate = 0.001;
    int batch_size = 500;
    double l1_regularization = 1e-5;
    double dropout = 0.0;
    int early_stop_epochs = 20;
    std::uint64_t seed = 0;
    double validation_fraction = 0.2;
};

// Feed-forward ReLU regressor with a linear output head. All hidden-layer
// weights live in W[0..L-1], the output row in W[L].
struct ReluDnn {
    ReluDnnSpec spec;
    std::size_t input_dim = 0;
    std::vector<Matrix> W;              // W[l]: units x fan_in
    std::vector<std::vector<double>> b; // b[l]: units

    std::size_t n_layers() const { return spec.layer_sizes.size(); }
    std::size_t hidden_units() const {
        std::size_t s = 0;
        for (int h : spec.layer_sizes) s += static_cast<std::size_t>(h);
        return s;
    }

    double predict_row(const double* x) const {
        std::vector<double> a(x, x + input_dim), next;
        for (std::size_t l = 0; l < W.size(); ++l) {
            next.assign(W[l].rows, 0.0);
            for (std::size_t u = 0; u < W[l].rows; ++u) {
                double z = b[l][u];
                const double* w = W[l].row(u);
                for (std::size_t j = 0; j < W[l].cols; ++j) z += w[j] * a[j];
                next[u] = (l + 1 < W.size()) ? (z > 0.0 ? z : 0.0) : z;
            }
            a.swap(next);
        }
        return a[0];
    }
    std::vector<double> predict(const Matrix& X) const {
        std::vector<double> out(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i));
        return out;
    }

    // Hidden-unit on/off pattern, strict positivity; exactly-zero
    // preactivations count as off.
    std::vector<std::uint8_t> activation_pattern(const double* x) const {
        std::vector<std::uint8_t> pat;
        pat.reserve(hidden_units());
        std::vector<double> a(x, x + input_dim), next;
        for (std::size_t l = 0; l + 1 < W.size(); ++l) {
            next.assign(W[l].rows, 0.0);
            for (std::size_t u = 0; u < W[l].rows; ++u) {
                double z = b[l][u];
                const double* w = W[l].row(u);
                for (std::size_t j = 0; j < W[l].cols; ++j) z += w[j] * a[j];
                pat.push_back(z > 0.0 ? 1 : 0);
                next[u] = z > 0.0 ? z : 0.0;
            }
            a.swap(next);
        }
        return pat;
    }

    std::vector<double> flatten_params() const {
        std::vector<double> p;
        for (std::size_t l = 0; l < W.size(); ++l) {
            p.insert(p.end(), W[l].v.begin(), W[l].v.end());
            p.insert(p.end(), b[l].begin(), b[l].end());
        }
        return p;
    }
    void set_params(const std::vector<double>& p) {
        std::size_t k = 0;
        for (std::size_t l = 0; l < W.size(); ++l) {
            std::copy(p.begin() + k, p.begin() + k + W[l].v.size(), W[l].v.begin());
            k += W[l].v.size();
            std::copy(p.begin() + k, p.begin() + k + b[l].size(), b[l].begin());
            k += b[l].size();
        }
    }

    // Loss = MSE + l1 * sum|W| (weights only, not biases); gradient in
    // flatten_params() order. Used by training and by the finite-difference
    // gradient tests. `drop` holds per-hidden-layer inverted-dropout masks
    // (0 or 1/(1-p)), applied to activations and their gradients.
    double loss_and_gradient(const Matrix& X, const std::vector<double>& y, std::vector<double>& grad,
                             const std::vector<Matrix>* drop = nullptr) const {
        const std::size_t m = X.rows, L = W.size();
        std::vector<Matrix> A(L + 1); // activations, A[0] = X
        std::vector<Matrix> Z(L);
        A[0] = X;
        for (std::size_t l = 0; l < L; ++l) {
            Z[l] = Matrix(m, W[l].rows);
            A[l + 1] = Matrix(m, W[l].rows);
            for (std::size_t i = 0; i < m; ++i) {
                const double* a = A[l].row(i);
                for (std::size_t u = 0; u < W[l].rows; ++u) {
                    double z = b[l][u];
                    const double* w = W[l].row(u);
                    for (std::size_t j = 0; j < W[l].cols; ++j) z += w[j] * a[j];
                    Z[l].at(i, u) = z;
                    double act = (l + 1 < L) ? (z > 0.0 ? z : 0.0) : z;
                    if (drop && l + 1 < L) act *= (*drop)[l].at(i, u);
                    A[l + 1].at(i, u) = act;
                }
            }
        }

        double loss = 0.0;
        Matrix G(m, 1);
        for (std::size_t i = 0; i < m; ++i) {
            const double r = A[L].at(i, 0) - y[i];
            loss += r * r;
            G.at(i, 0) = 2.0 * r / static_cast<double>(m);
        }
        loss /= static_cast<double>(m);
        for (std::size_t l = 0; l < L; ++l)
            for (double w : W[l].v) loss += spec.l1_regularization * std::abs(w);

        std::vector<Matrix> dW(L);
        std::vector<std::vector<double>> db(L);
        for (std::size_t ll = L; ll-- > 0;) {
            dW[ll] = Matrix(W[ll].rows, W[ll].cols);
            db[ll].assign(b[ll].size(), 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double* a = A[ll].row(i);
                for (std::size_t u = 0; u < W[ll].rows; ++u) {
                    const double g = G.at(i, u);
                    db[ll][u] += g;
                    double* dw = dW[ll].row(u);
                    for (std::size_t j = 0; j < W[ll].cols; ++j) dw[j] += g * a[j];
                }
            }
            for (std::size_t k = 0; k < dW[ll].v.size(); ++k) {
                const double w = W[ll].v[k];
                dW[ll].v[k] += spec.l1_regularization * (w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0));
            }
            if (ll > 0) {
                Matrix Gprev(m, W[ll - 1].rows);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < W[ll].cols; ++j) {
                        double s = 0.0;
                        for (std::size_t u = 0; u < W[ll].rows; ++u) s += G.at(i, u) * W[ll].at(u, j);
                        double g = (Z[ll - 1].at(i, j) > 0.0) ? s : 0.0;
                        if (drop) g *= (*drop)[ll - 1].at(i, j);
                        Gprev.at(i, j) = g;
                    }
                G = std::move(Gprev);
            }
        }

        grad.clear();
        for (std::size_t l = 0; l < L; ++l) {
            grad.insert(grad.end(), dW[l].v.begin(), dW[l].v.end());
            grad.insert(grad.end(), db[l].begin(), db[l].end());
        }
        return loss;
    }
};

inline ReluDnn make_relu_dnn(std::size_t input_dim, const ReluDnnSpec& spec) {
    for (int h : spec.layer_sizes)
        if (h < 1) throw std::invalid_argument("relu_dnn: layer sizes must be positive");
    if (!(spec.dropout >= 0.0 && spec.dropout < 1.0))
        throw std::invalid_argument("relu_dnn: dropout must lie in [0,1)");
    ReluDnn net;
    net.spec = spec;
    net.input_dim = input_dim;
    Rng rng(mix_seed(spec.seed, 0));
    std::size_t fan_in = input_dim;
    for (std::size_t l = 0; l <= spec.layer_sizes.size(); ++l) {
        const std::size_t units = (l < spec.layer_sizes.size()) ? static_cast<std::size_t>(spec.layer_sizes[l]) : 1;
        // He/Kaiming uniform as in the common torch Linear default:
        // bound 1/sqrt(fan_in) for weights and biases
        const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(units, fan_in);
        for (auto& x : w.v) x = rng.uniform(-limit, limit);
        net.W.push_back(std::move(w));
        std::vector<double> bias(units);
        for (auto& x : bias) x = rng.uniform(-limit, limit);
        net.b.push_back(std::move(bias));
        fan_in = units;
    }
    return net;
}

// Seeded He-uniform init, Adam, mini-batches of min(batch_size, n), early
// stopping on a held-out validation fraction; returns the weights of the
// best validation epoch.
inline ReluDnn fit_relu_dnn(const Matrix& X, const std::vector<double>& y, const ReluDnnSpec& spec) {
    const std::size_t n = X.rows;
    if (n == 0) throw std::invalid_argument("fit_relu_dnn: empty training set");
    if (n != y.size()) throw std::invalid_argument("fit_relu_dnn: X/y length mismatch");
    if (n < 20) throw std::invalid_argument("fit_relu_dnn: needs at least 20 training rows");

    ReluDnn net = make_relu_dnn(X.cols, spec);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng(mix_seed(spec.seed, 1));
    split_rng.shuffle(order);
    const std::size_t n_val = static_cast<std::size_t>(std::floor(spec.validation_fraction * static_cast<double>(n)));
    std::vector<std::size_t> val_rows(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> fit_rows(order.begin() + n_val, order.end());

    const Matrix Xv = X.gather_rows(val_rows);
    std::vector<double> yv(val_rows.size());
    for (std::size_t i = 0; i < val_rows.size(); ++i) yv[i] = y[val_rows[i]];

    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(spec.batch_size), fit_rows.size());
    Rng epoch_rng(mix_seed(spec.seed, 2));
    Rng drop_rng(mix_seed(spec.seed, 3));

    // Adam state
    std::vector<double> params = net.flatten_params();
    std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long long t = 0;

    auto eval_mse = [&](const Matrix& Xe, const std::vector<double>& ye) {
        if (Xe.rows == 0) return 0.0;
        return mse(ye, net.predict(Xe));
    };

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = params;
    int stall = 0;

    std::vector<double> grad;
    for (int epoch = 0; epoch < spec.max_epochs; ++epoch) {
        epoch_rng.shuffle(fit_rows);
        for (std::size_t start = 0; start < fit_rows.size(); start += batch) {
            const std::size_t stop = std::min(start + batch, fit_rows.size());
            std::vector<std::size_t> bidx(fit_rows.begin() + start, fit_rows.begin() + stop);
            Matrix Xb = X.gather_rows(bidx);
            std::vector<double> yb(bidx.size());
            for (std::size_t i = 0; i < bidx.size(); ++i) yb[i] = y[bidx[i]];

            std::vector<Matrix> masks;
            if (spec.dropout > 0.0) {
                const double keep = 1.0 - spec.dropout;
                for (std::size_t l = 0; l < spec.layer_sizes.size(); ++l) {
                    Matrix mk(Xb.rows, static_cast<std::size_t>(spec.layer_sizes[l]));
                    for (auto& v : mk.v) v = (drop_rng.uniform01() < keep) ? 1.0 / keep : 0.0;
                    masks.push_back(std::move(mk));
                }
            }
            const double loss = net.loss_and_gradient(Xb, yb, grad, masks.empty() ? nullptr : &masks);
            if (!std::isfinite(loss))
                throw std::runtime_error("relu_dnn training diverged at epoch " + std::to_string(epoch));

            ++t;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
            for (std::size_t k = 0; k < params.size(); ++k) {
                m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
                m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
                params[k] -= spec.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + adam_eps);
            }
            net.set_params(params);
        }

        const double v = n_val > 0 ? eval_mse(Xv, yv) : [&] {
            const Matrix Xf = X.gather_rows(fit_rows);
            std::vector<double> yf(fit_rows.size());
            for (std::size_t i = 0; i < fit_rows.size(); ++i) yf[i] = y[fit_rows[i]];
            return eval_mse(Xf, yf);
        }();
        if (v < best_val) {
            best_val = v;
            best_params = params;
            stall = 0;
        } else if (++stall >= spec.early_stop_epochs) {
            break;
        }
    }
    net.set_params(best_params);
    return net;
}

} // namespace rulxai
