#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulxai/common.hpp"
#include "rulxai/dataset.hpp"
#include "rulxai/explain.hpp"
#include "rulxai/model.hpp"
#include "rulxai/rng.hpp"

namespace rulxai {

struct AccuracyRecord {
    std::string split;
    double mse = 0.0;
    double mae = 0.0;
    double r2 = 0.0; // NaN when the split target has zero variance
};

struct AccuracyReport {
    AccuracyRecord train, test;
    double gap_mse = 0.0, gap_mae = 0.0, gap_r2 = 0.0; // test - train
};

inline AccuracyReport accuracy_report(const FittedModel& model, const TabularDataset& ds) {
    const auto tr = ds.train_indices(), te = ds.test_indices();
    if (tr.empty() || te.empty()) throw std::invalid_argument("accuracy_report: both splits must be non-empty");
    AccuracyReport rep;
    auto fill = [&](const std::vector<std::size_t>& idx, const char* name) {
        const Matrix X = ds.X.gather_rows(idx);
        const auto y = ds.y_at(idx);
        const auto pred = model.predict(X);
        return AccuracyRecord{name, mse(y, pred), mae(y, pred), r_squared(y, pred)};
    };
    rep.train = fill(tr, "train");
    rep.test = fill(te, "test");
    rep.gap_mse = rep.test.mse - rep.train.mse;
    rep.gap_mae = rep.test.mae - rep.train.mae;
    rep.gap_r2 = rep.test.r2 - rep.train.r2;
    return rep;
}

struct ResidualPairs {
    std::vector<std::pair<double, double>> train, test; // (prediction, residual = y - prediction)
};

inline ResidualPairs residual_pairs(const FittedModel& model, const TabularDataset& ds) {
    ResidualPairs rp;
    auto fill = [&](const std::vector<std::size_t>& idx, std::vector<std::pair<double, double>>& out) {
        for (std::size_t i : idx) {
            const double p = model.predict_row(ds.X.row(i));
            out.push_back({p, ds.y[i] - p});
        }
    };
    fill(ds.train_indices(), rp.train);
    fill(ds.test_indices(), rp.test);
    return rp;
}

struct OverfitBin {
    double lo = 0.0, hi = 0.0; // feature range of the bin (train quantiles)
    int train_count = 0, test_count = 0;
    double train_mse = 0.0, test_mse = 0.0, gap = 0.0;
    bool flagged = false;
};

struct OverfitSlices {
    std::string feature;
    double global_test_mse = 0.0;
    double flag_factor = 1.5;
    std::vector<OverfitBin> bins;
};

// Equal-frequency slices along one feature (edges from the training
// split); a bin is flagged when its test MSE exceeds flag_factor times the
// global test MSE.
inline OverfitSlices overfit_slices(const FittedModel& model, const TabularDataset& ds, const std::string& feature,
                                    int num_bins = 10, double flag_factor = 1.5) {
    const std::size_t f = ds.feature_index(feature);
    const auto tr = ds.train_indices(), te = ds.test_indices();
    std::vector<double> col(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) col[i] = ds.X.at(tr[i], f);
    if (is_constant(col)) throw std::invalid_argument("overfit_slices: feature '" + feature + "' is constant");

    const auto cuts = quantile_cuts(col, num_bins);
    const std::size_t K = cuts.size() + 1;

    OverfitSlices s;
    s.feature = feature;
    s.flag_factor = flag_factor;
    s.bins.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        s.bins[k].lo = k == 0 ? -std::numeric_limits<double>::infinity() : cuts[k - 1];
        s.bins[k].hi = k == K - 1 ? std::numeric_limits<double>::infinity() : cuts[k];
    }

    std::vector<double> tr_sse(K, 0.0), te_sse(K, 0.0);
    for (std::size_t i : tr) {
        const std::size_t k = bin_of(cuts, ds.X.at(i, f));
        const double r = ds.y[i] - model.predict_row(ds.X.row(i));
        tr_sse[k] += r * r;
        s.bins[k].train_count += 1;
    }
    double global_sse = 0.0;
    for (std::size_t i : te) {
        const std::size_t k = bin_of(cuts, ds.X.at(i, f));
        const double r = ds.y[i] - model.predict_row(ds.X.row(i));
        te_sse[k] += r * r;
        global_sse += r * r;
        s.bins[k].test_count += 1;
    }
    s.global_test_mse = te.empty() ? 0.0 : global_sse / static_cast<double>(te.size());
    for (std::size_t k = 0; k < K; ++k) {
        auto& b = s.bins[k];
        b.train_mse = b.train_count ? tr_sse[k] / b.train_count : 0.0;
        b.test_mse = b.test_count ? te_sse[k] / b.test_count : 0.0;
        b.gap = b.test_mse - b.train_mse;
        b.flagged = b.test_count > 0 && b.test_mse > flag_factor * s.global_test_mse;
    }
    return s;
}

struct ConformalBand {
    double alpha = 0.1;
    double q_hat = 0.0;
    double coverage = 0.0;
    double avg_bandwidth = 0.0; // 2 * q_hat
    struct Segment {
        int count = 0;
        double coverage = 0.0;
        double bandwidth = 0.0;
        double pred_lo = 0.0, pred_hi = 0.0;
    };
    std::vector<Segment> segmented; // 10 deciles of predicted value
    nlohmann::json metadata = nlohmann::json::object();
};

// Split conformal prediction: the training rows are re-split into a
// proper-train and a calibration part, the model spec is refit on the
// proper-train rows, and q_hat is the ceil((n_c+1)(1-alpha)) smallest
// calibration |residual|.
inline ConformalBand conformal_reliability(const FittedModel& model, const TabularDataset& ds, double alpha = 0.1,
                                           double calib_fraction = 0.5, std::uint64_t seed = 0) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("conformal_reliability: alpha must lie in (0,1)");
    auto tr = ds.train_indices();
    const auto te = ds.test_indices();
    Rng rng(seed);
    rng.shuffle(tr);
    const std::size_t n_calib = static_cast<std::size_t>(std::floor(calib_fraction * static_cast<double>(tr.size())));
    if (n_calib < 10) throw std::invalid_argument("conformal_reliability: calibration set smaller than 10 rows");
    std::vector<std::size_t> calib(tr.begin(), tr.begin() + n_calib);
    std::vector<std::size_t> proper(tr.begin() + n_calib, tr.end());

    const FittedModel refit_model = refit(model.manifest, ds.X.gather_rows(proper), ds.y_at(proper));

    std::vector<double> scores;
    for (std::size_t i : calib) scores.push_back(std::abs(ds.y[i] - refit_model.predict_row(ds.X.row(i))));
    std::sort(scores.begin(), scores.end());
    std::size_t k = static_cast<std::size_t>(std::ceil((static_cast<double>(n_calib) + 1.0) * (1.0 - alpha)));
    k = std::min(k, n_calib); // alpha < 1/(n_c+1) would demand an infinite band
    const double q_hat = scores[k - 1];

    ConformalBand band;
    band.alpha = alpha;
    band.q_hat = q_hat;
    band.avg_bandwidth = 2.0 * q_hat;
    band.metadata = {{"calib_fraction", calib_fraction}, {"seed", seed}, {"n_calib", n_calib},
                     {"n_proper", proper.size()}};

    std::vector<double> pred(te.size());
    std::vector<int> covered(te.size());
    for (std::size_t i = 0; i < te.size(); ++i) {
        pred[i] = refit_model.predict_row(ds.X.row(te[i]));
        covered[i] = std::abs(ds.y[te[i]] - pred[i]) <= q_hat ? 1 : 0;
    }
    double cov = 0.0;
    for (int c : covered) cov += c;
    band.coverage = te.empty() ? 0.0 : cov / static_cast<double>(te.size());

    // deciles of predicted value: sorted rows split into 10 contiguous groups
    const auto order = argsort(pred);
    const std::size_t G = 10;
    band.segmented.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
        const std::size_t lo = order.size() * g / G, hi = order.size() * (g + 1) / G;
        auto& seg = band.segmented[g];
        seg.bandwidth = 2.0 * q_hat;
        seg.count = static_cast<int>(hi - lo);
        if (lo == hi) continue;
        double c = 0.0;
        for (std::size_t t = lo; t < hi; ++t) c += covered[order[t]];
        seg.coverage = c / static_cast<double>(hi - lo);
        seg.pred_lo = pred[order[lo]];
        seg.pred_hi = pred[order[hi - 1]];
    }
    return band;
}

// Test MSE under seeded Gaussian covariate noise of scale lambda * sigma_j
// per feature, averaged over repeats. lambda = 0 is the unperturbed MSE.
inline CurveSeries robustness_curve(const FittedModel& model, const TabularDataset& ds,
                                    const std::vector<double>& lambdas = {}, int repeats = 10,
                                    std::uint64_t seed = 0) {
    if (repeats < 1) throw std::invalid_argument("robustness_curve: repeats must be >= 1");
    std::vector<double> ls = lambdas;
    if (ls.empty())
        for (int k = 0; k <= 8; ++k) ls.push_back(0.05 * k);
    for (double l : ls)
        if (l < 0.0 || l > 1.0) throw std::invalid_argument("robustness_curve: lambdas must lie in [0,1]");

    const Matrix Xt = ds.x_test();
    const auto yt = ds.y_test();
    const Matrix Xtrain = ds.x_train();
    std::vector<double> sigma(ds.d());
    for (std::size_t j = 0; j < ds.d(); ++j) {
        const auto col = Xtrain.column(j);
        sigma[j] = is_constant(col) ? 0.0 : stddev(col);
    }

    CurveSeries c;
    c.feature = "";
    c.kind = "robustness";
    for (std::size_t li = 0; li < ls.size(); ++li) {
        const double lambda = ls[li];
        c.grid.push_back(lambda);
        if (lambda == 0.0) {
            c.values.push_back(mse(yt, model.predict(Xt)));
            continue;
        }
        double acc = 0.0;
        for (int r = 0; r < repeats; ++r) {
            Rng rng(mix_seed(seed, li * 1009 + static_cast<std::size_t>(r)));
            Matrix Xp = Xt;
            for (std::size_t i = 0; i < Xp.rows; ++i)
                for (std::size_t j = 0; j < Xp.cols; ++j) Xp.at(i, j) += lambda * sigma[j] * rng.gaussian();
            acc += mse(yt, model.predict(Xp));
        }
        c.values.push_back(acc / repeats);
    }
    return c;
}

struct ResilienceResult {
    CurveSeries curve; // MSE over the worst ceil(ratio * n_test) rows by |residual|
    std::vector<std::pair<std::string, double>> worst_shift; // standardized mean difference, worst 10% vs full test
};

inline ResilienceResult resilience_curve(const FittedModel& model, const TabularDataset& ds,
                                         const std::vector<double>& ratios = {}) {
    std::vector<double> rs = ratios;
    if (rs.empty())
        for (int k = 1; k <= 10; ++k) rs.push_back(0.1 * k);
    for (double r : rs)
        if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("resilience_curve: ratios must lie in (0,1]");

    const auto te = ds.test_indices();
    if (te.empty()) throw std::invalid_argument("resilience_curve: empty test split");
    const Matrix Xt = ds.x_test();
    const auto yt = ds.y_test();
    const auto pred = model.predict(Xt);

    std::vector<double> abs_res(te.size());
    for (std::size_t i = 0; i < te.size(); ++i) abs_res[i] = std::abs(yt[i] - pred[i]);
    std::vector<std::size_t> order = argsort(abs_res);
    std::reverse(order.begin(), order.end()); // worst first

    std::vector<double> prefix_sq(te.size() + 1, 0.0);
    for (std::size_t k = 0; k < order.size(); ++k)
        prefix_sq[k + 1] = prefix_sq[k] + abs_res[order[k]] * abs_res[order[k]];

    ResilienceResult out;
    out.curve.feature = "";
    out.curve.kind = "resilience";
    for (double ratio : rs) {
        const std::size_t m = std::min<std::size_t>(
            te.size(), static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(te.size()))));
        out.curve.grid.push_back(ratio);
        out.curve.values.push_back(prefix_sq[m] / static_cast<double>(m));
    }

    const std::size_t worst_n =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(te.size()))));
    for (std::size_t j = 0; j < ds.d(); ++j) {
        const auto col = Xt.column(j);
        const double sd = is_constant(col) ? 0.0 : stddev(col);
        double mw = 0.0;
        for (std::size_t k = 0; k < worst_n; ++k) mw += Xt.at(order[k], j);
        mw /= static_cast<double>(worst_n);
        const double diff = sd > 0.0 ? (mw - mean(col)) / sd : 0.0;
        out.worst_shift.push_back({ds.feature_names[j], diff});
    }
    return out;
}

// ---- report assembly and serialization ----

struct ModelDiagnostics {
    std::string model_name;
    AccuracyReport accuracy;
    ResidualPairs residuals;
    OverfitSlices overfit;
    ConformalBand reliability;
    CurveSeries robustness;
    ResilienceResult resilience;
};

struct DiagnosticsReport {
    std::vector<ModelDiagnostics> models; // sorted by model_name
    nlohmann::json metadata = nlohmann::json::object();
};

inline nlohmann::json accuracy_json(const AccuracyReport& a) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
    auto rec = [&](const AccuracyRecord& r) {
        return nlohmann::json{{"split", r.split}, {"mse", r.mse}, {"mae", r.mae}, {"r2", num(r.r2)}};
    };
    return nlohmann::json{{"train", rec(a.train)},
                          {"test", rec(a.test)},
                          {"gap", {{"mse", a.gap_mse}, {"mae", a.gap_mae}, {"r2", num(a.gap_r2)}}}};
}

inline nlohmann::json conformal_json(const ConformalBand& b) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : b.segmented)
        segs.push_back({{"count", s.count},
                        {"coverage", s.coverage},
                        {"bandwidth", s.bandwidth},
                        {"pred_lo", s.pred_lo},
                        {"pred_hi", s.pred_hi}});
    return nlohmann::json{{"alpha", b.alpha},
                          {"q_hat", b.q_hat},
                          {"coverage", b.coverage},
                          {"avg_bandwidth", b.avg_bandwidth},
                          {"segmented", segs},
                          {"metadata", b.metadata}};
}

inline nlohmann::json overfit_json(const OverfitSlices& s) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : s.bins)
        bins.push_back({{"lo", std::isfinite(b.lo) ? nlohmann::json(b.lo) : nlohmann::json()},
                        {"hi", std::isfinite(b.hi) ? nlohmann::json(b.hi) : nlohmann::json()},
                        {"train_count", b.train_count},
                        {"test_count", b.test_count},
                        {"train_mse", b.train_mse},
                        {"test_mse", b.test_mse},
                        {"gap", b.gap},
                        {"flagged", b.flagged}});
    return nlohmann::json{
        {"feature", s.feature}, {"global_test_mse", s.global_test_mse}, {"flag_factor", s.flag_factor}, {"bins", bins}};
}

inline nlohmann::json resilience_json(const ResilienceResult& r) {
    nlohmann::json shift = nlohmann::json::array();
    for (const auto& [name, v] : r.worst_shift) shift.push_back({{"feature", name}, {"shift", v}});
    return nlohmann::json{{"curve", curve_json(r.curve)}, {"worst_shift", shift}};
}

inline nlohmann::json diagnostics_json(const DiagnosticsReport& rep) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : rep.models)
        models.push_back({{"model", m.model_name},
                          {"accuracy", accuracy_json(m.accuracy)},
                          {"overfit", overfit_json(m.overfit)},
                          {"reliability", conformal_json(m.reliability)},
                          {"robustness", curve_json(m.robustness)},
                          {"resilience", resilience_json(m.resilience)}});
    return nlohmann::json{{"models", models}, {"metadata", rep.metadata}};
}

inline std::string residual_csv(const ResidualPairs& rp) {
    std::string out = "prediction,residual,split\n";
    char b1[64], b2[64];
    auto emit = [&](const std::vector<std::pair<double, double>>& rows, const char* split) {
        for (const auto& [p, r] : rows) {
            std::snprintf(b1, sizeof(b1), "%.17g", p);
            std::snprintf(b2, sizeof(b2), "%.17g", r);
            out += std::string(b1) + "," + b2 + "," + split + "\n";
        }
    };
    emit(rp.train, "train");
    emit(rp.test, "test");
    return out;
}

} // namespace rulxai
