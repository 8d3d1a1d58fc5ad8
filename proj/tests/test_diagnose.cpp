#include <catch2/catch_amalgamated.hpp>

#include "rulxai/rulxai.hpp"
#include "support/fixtures.hpp"

using namespace rulxai;

namespace {

// four plateaus, duplicated x values in both splits: a depth-5 tree fits
// this exactly on train and test
TabularDataset plateau_dataset() {
    Matrix X(80, 1);
    std::vector<double> y(80);
    for (std::size_t i = 0; i < 80; ++i) {
        const double block = static_cast<double>(i % 4);
        X.at(i, 0) = 0.2 * block;
        y[i] = 3.0 * block - 1.0;
    }
    return fixtures::make_dataset(X, y, 0.25, 3);
}

} // namespace

TEST_CASE("perfect predictor scores zero error and unit r2", "[diagnose]") {
    auto ds = plateau_dataset();
    const auto model = fit_model_tree(ds, TreeSpec{});
    const auto rep = accuracy_report(model, ds);
    CHECK(rep.train.mse == 0.0);
    CHECK(rep.test.mse == 0.0);
    CHECK(rep.train.mae == 0.0);
    CHECK(rep.test.mae == 0.0);
    CHECK(rep.train.r2 == 1.0);
    CHECK(rep.test.r2 == 1.0);
    CHECK(rep.gap_mse == 0.0);
    CHECK(rep.gap_mae == 0.0);
}

TEST_CASE("predicting the split mean gives r2 zero", "[diagnose]") {
    const auto& ds = fixtures::engine1();
    const auto model = fixtures::constant_model(mean(ds.y_train()), ds.feature_names);
    const auto rep = accuracy_report(model, ds);
    CHECK(std::abs(rep.train.r2) < 1e-12);
}

TEST_CASE("zero-variance split target reports r2 as nan, not a crash", "[diagnose]") {
    Rng rng(5);
    Matrix X(40, 1);
    for (auto& v : X.v) v = rng.uniform01();
    std::vector<double> y(40, 2.0);
    auto ds = fixtures::make_dataset(X, y, 0.25, 0);
    const auto model = fixtures::constant_model(2.0, ds.feature_names);
    const auto rep = accuracy_report(model, ds);
    CHECK(std::isnan(rep.train.r2));
    CHECK(std::isnan(rep.test.r2));
    CHECK(rep.train.mse == 0.0);
    const auto j = accuracy_json(rep);
    CHECK(j["train"]["r2"].is_null());
    CHECK(j["test"]["mse"] == 0.0);
}

TEST_CASE("engine-1 tree meets the accuracy band", "[diagnose]") {
    const auto rep = accuracy_report(fixtures::engine1_tree(), fixtures::engine1());
    CHECK(rep.test.mae <= 0.02);
    CHECK(rep.test.r2 >= 0.99);
}

TEST_CASE("accuracy metrics match independent recomputations", "[diagnose]") {
    const auto& ds = fixtures::engine1();
    const auto& model = fixtures::engine1_tree();
    const auto rep = accuracy_report(model, ds);

    const auto te = ds.test_indices();
    double sse = 0.0, sae = 0.0;
    for (std::size_t i : te) {
        const double r = ds.y[i] - model.predict_row(ds.X.row(i));
        sse += r * r;
        sae += std::abs(r);
    }
    CHECK(std::abs(rep.test.mse - sse / te.size()) < 1e-12);
    CHECK(std::abs(rep.test.mae - sae / te.size()) < 1e-12);
}

TEST_CASE("residual pairs: perfect model, lengths, leaf-mean centering", "[diagnose]") {
    auto ds = plateau_dataset();
    const auto perfect = fit_model_tree(ds, TreeSpec{});
    const auto rp = residual_pairs(perfect, ds);
    CHECK(rp.train.size() == ds.train_indices().size());
    CHECK(rp.test.size() == ds.test_indices().size());
    for (const auto& [p, r] : rp.train) CHECK(r == 0.0);

    // unpruned tree on engine-1: train residuals average to zero per leaf
    const auto rp2 = residual_pairs(fixtures::engine1_tree(), fixtures::engine1());
    double s = 0.0;
    for (const auto& [p, r] : rp2.train) s += r;
    CHECK(std::abs(s / rp2.train.size()) < 1e-9);
}

TEST_CASE("overfit slices: perfect model has no flags, bins partition", "[diagnose]") {
    auto ds = plateau_dataset();
    const auto model = fit_model_tree(ds, TreeSpec{});
    const auto s = overfit_slices(model, ds, "f0", 4);
    int tr = 0, te = 0;
    for (const auto& b : s.bins) {
        tr += b.train_count;
        te += b.test_count;
        CHECK(!b.flagged);
    }
    CHECK(tr == static_cast<int>(ds.train_indices().size()));
    CHECK(te == static_cast<int>(ds.test_indices().size()));
}

TEST_CASE("overfit slices: a leaky region is flagged", "[diagnose]") {
    Rng rng(17);
    const std::size_t n = 400;
    Matrix X(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        X.at(i, 0) = (static_cast<double>(i) + 0.5) / n;
        y[i] = X.at(i, 0);
        if (X.at(i, 0) > 0.9) y[i] += 3.0 * rng.gaussian(); // one noisy region
    }
    auto ds = fixtures::make_dataset(X, y, 0.3, 7);
    const auto model = fit_model_tree(ds, TreeSpec{});
    const auto s = overfit_slices(model, ds, "f0", 10);
    bool last_flagged = false;
    for (const auto& b : s.bins)
        if (b.lo > 0.8) last_flagged |= b.flagged;
    CHECK(last_flagged);
    CHECK_THROWS_AS(overfit_slices(model, ds, "nope", 10), std::invalid_argument);
}

TEST_CASE("conformal: zero residuals give a zero-width band with full coverage", "[diagnose]") {
    auto ds = plateau_dataset();
    const auto model = fit_model_tree(ds, TreeSpec{});
    const auto band = conformal_reliability(model, ds, 0.1, 0.5, 0);
    CHECK(band.q_hat == 0.0);
    CHECK(band.coverage == 1.0);
    CHECK(band.avg_bandwidth == 0.0);
    CHECK(band.segmented.size() == 10);
}

TEST_CASE("conformal: q_hat is monotone non-increasing in alpha", "[diagnose]") {
    const auto& ds = fixtures::engine1();
    const auto& model = fixtures::engine1_tree();
    double prev = 1e300;
    for (double alpha : {0.05, 0.1, 0.2, 0.4}) {
        const auto band = conformal_reliability(model, ds, alpha, 0.5, 3);
        CHECK(band.q_hat <= prev + 1e-15);
        CHECK(band.avg_bandwidth == 2.0 * band.q_hat);
        prev = band.q_hat;
    }
}

TEST_CASE("conformal coverage is calibrated on synthetic iid data", "[diagnose]") {
    int in_band = 0;
    for (int seed = 0; seed < 5; ++seed) {
        Rng rng(900 + seed);
        const std::size_t n = 1500;
        Matrix X(n, 2);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            X.at(i, 0) = rng.uniform01();
            X.at(i, 1) = rng.uniform01();
            y[i] = 2.0 * X.at(i, 0) + X.at(i, 1) + 0.1 * rng.gaussian();
        }
        auto ds = fixtures::make_dataset(X, y, 1.0 / 3.0, seed);
        const auto model = fit_model_tree(ds, TreeSpec{});
        const auto band = conformal_reliability(model, ds, 0.1, 0.5, seed);
        if (band.coverage >= 0.86 && band.coverage <= 0.94) ++in_band;
    }
    CHECK(in_band >= 4);
}

TEST_CASE("conformal rejects a too-small calibration set", "[diagnose]") {
    Rng rng(23);
    Matrix X(24, 1);
    for (auto& v : X.v) v = rng.uniform01();
    std::vector<double> y(24);
    for (std::size_t i = 0; i < 24; ++i) y[i] = X.at(i, 0);
    auto ds = fixtures::make_dataset(X, y, 0.25, 0); // 18 train rows -> 9 calib
    const auto model = fit_model_tree(ds, TreeSpec{2, 1, 0.0});
    CHECK_THROWS_AS(conformal_reliability(model, ds, 0.1, 0.5, 0), std::invalid_argument);
}

TEST_CASE("robustness: lambda zero equals the baseline exactly", "[diagnose]") {
    const auto& ds = fixtures::engine1();
    const auto& model = fixtures::engine1_tree();
    const auto c = robustness_curve(model, ds);
    REQUIRE(c.grid[0] == 0.0);
    CHECK(c.values[0] == accuracy_report(model, ds).test.mse);
    CHECK(c.grid.size() == 9); // default ladder 0..0.4

    const auto again = robustness_curve(model, ds);
    CHECK(c.values == again.values);
}

TEST_CASE("robustness: constant model is flat across lambda", "[diagnose]") {
    const auto& ds = fixtures::engine1();
    const auto model = fixtures::constant_model(0.5, ds.feature_names);
    const auto c = robustness_curve(model, ds, {0.0, 0.2, 0.4}, 3, 5);
    CHECK(c.values[0] == c.values[1]);
    CHECK(c.values[1] == c.values[2]);
}

TEST_CASE("resilience: alpha one equals test mse, curve non-increasing", "[diagnose]") {
    const auto& ds = fixtures::engine1();
    for (const auto* model : fixtures::engine1_models()) {
        const auto r = resilience_curve(*model, ds);
        REQUIRE(r.curve.grid.back() == 1.0);
        CHECK(std::abs(r.curve.values.back() - accuracy_report(*model, ds).test.mse) < 1e-12);
        for (std::size_t k = 1; k < r.curve.values.size(); ++k)
            CHECK(r.curve.values[k] <= r.curve.values[k - 1] + 1e-15);
    }
}

TEST_CASE("resilience shift table is small for a uniform-error model", "[diagnose]") {
    Rng rng(29);
    const std::size_t n = 600;
    Matrix X(n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) X.at(i, j) = rng.uniform01();
        y[i] = rng.gaussian(); // error independent of features
    }
    auto ds = fixtures::make_dataset(X, y, 0.5, 0);
    const auto model = fixtures::constant_model(0.0, ds.feature_names);
    const auto r = resilience_curve(model, ds);
    for (const auto& [name, shift] : r.worst_shift) CHECK(std::abs(shift) < 0.5);
}

TEST_CASE("diagnostics report serializes with stable keys", "[diagnose]") {
    const auto& ds = fixtures::engine1();
    const auto& model = fixtures::engine1_tree();
    ModelDiagnostics md;
    md.model_name = "tree";
    md.accuracy = accuracy_report(model, ds);
    md.residuals = residual_pairs(model, ds);
    md.overfit = overfit_slices(model, ds, "cycle");
    md.reliability = conformal_reliability(model, ds, 0.1, 0.5, 0);
    md.robustness = robustness_curve(model, ds);
    md.resilience = resilience_curve(model, ds);
    DiagnosticsReport rep;
    rep.models.push_back(md);

    const auto j = diagnostics_json(rep);
    CHECK(j["models"][0]["model"] == "tree");
    CHECK(j["models"][0]["reliability"]["segmented"].size() == 10);
    CHECK(j.dump() == diagnostics_json(rep).dump());

    const auto csv = residual_csv(md.residuals);
    CHECK(csv.rfind("prediction,residual,split\n", 0) == 0);
    const auto lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 1 + 178 + 45);
}
