#include <catch2/catch_amalgamated.hpp>

#include "rulxai/rulxai.hpp"
#include "support/fixtures.hpp"

using namespace rulxai;

namespace {

// prediction rebuilt by hand from the serialized term tables
double reconstruct(const EbmModel& e, const double* x) {
    double s = e.intercept;
    for (std::size_t f = 0; f < e.main_tables.size(); ++f) {
        std::size_t b = 0;
        while (b < e.main_cuts[f].size() && x[f] > e.main_cuts[f][b]) ++b;
        s += e.main_tables[f][b];
    }
    for (const auto& p : e.pairs) {
        std::size_t b1 = 0, b2 = 0;
        while (b1 < e.pair_cuts[p.f1].size() && x[p.f1] > e.pair_cuts[p.f1][b1]) ++b1;
        while (b2 < e.pair_cuts[p.f2].size() && x[p.f2] > e.pair_cuts[p.f2][b2]) ++b2;
        s += p.table[b1 * (e.pair_cuts[p.f2].size() + 1) + b2];
    }
    return s;
}

} // namespace

TEST_CASE("prediction equals intercept plus table lookups", "[ebm]") {
    const auto& ds = fixtures::engine1();
    const auto& e = fixtures::engine1_ebm().as_ebm();
    const Matrix Xt = ds.x_test();
    for (std::size_t i = 0; i < Xt.rows; ++i)
        CHECK(std::abs(e.predict_row(Xt.row(i)) - reconstruct(e, Xt.row(i))) < 1e-12);
}

TEST_CASE("purely additive target leaves pair terms near zero", "[ebm]") {
    Rng rng(41);
    const std::size_t n = 400;
    Matrix X(n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) X.at(i, j) = rng.uniform01();
        y[i] = 2.0 * X.at(i, 0) + std::sin(3.0 * X.at(i, 1)) - X.at(i, 2);
    }
    EbmSpec spec;
    spec.n_interactions = 3;
    const auto model = fit_ebm(X, y, spec);
    const double limit = 0.05 * stddev(y);
    for (const auto& p : model.pairs)
        for (double v : p.table) CHECK(std::abs(v) < limit);
}

TEST_CASE("linear target yields a monotone main curve", "[ebm]") {
    Rng rng(43);
    const std::size_t n = 400;
    Matrix X(n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        X.at(i, 0) = rng.uniform01();
        X.at(i, 1) = rng.uniform01();
        y[i] = 2.0 * X.at(i, 0);
    }
    EbmSpec spec;
    spec.n_interactions = 0;
    const auto model = fit_ebm(X, y, spec);
    const auto& curve = model.main_tables[0];
    // bootstrap bagging leaves sub-0.1% wiggles; monotone up to that noise
    const double tol = 1e-3 * (curve.back() - curve.front());
    for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k] >= curve[k - 1] - tol);
    CHECK(curve.back() - curve.front() > 1.0); // spans most of the 2.0 range
}

TEST_CASE("averaging two bag models equals the model of averaged tables", "[ebm]") {
    Rng rng(47);
    const std::size_t n = 120;
    Matrix X(n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        X.at(i, 0) = rng.uniform01();
        X.at(i, 1) = rng.uniform01();
        y[i] = X.at(i, 0) * X.at(i, 0) + 0.1 * rng.gaussian();
    }
    EbmSpec one_bag;
    one_bag.outer_bags = 1;
    one_bag.n_interactions = 0;
    EbmSpec other = one_bag;
    other.seed = 99;
    auto a = fit_ebm(X, y, one_bag);
    const auto b = fit_ebm(X, y, other);
    REQUIRE(a.main_cuts == b.main_cuts); // binning is data-determined, shared

    EbmModel avg = a;
    avg.intercept = 0.5 * (a.intercept + b.intercept);
    for (std::size_t f = 0; f < avg.main_tables.size(); ++f)
        for (std::size_t k = 0; k < avg.main_tables[f].size(); ++k)
            avg.main_tables[f][k] = 0.5 * (a.main_tables[f][k] + b.main_tables[f][k]);
    for (std::size_t i = 0; i < 20; ++i) {
        const double want = 0.5 * (a.predict_row(X.row(i)) + b.predict_row(X.row(i)));
        CHECK(std::abs(avg.predict_row(X.row(i)) - want) < 1e-12);
    }
}

TEST_CASE("engine-1 ebm lands in the expected band", "[ebm]") {
    const auto rep = accuracy_report(fixtures::engine1_ebm(), fixtures::engine1());
    CHECK(rep.test.r2 >= 0.85);
}

TEST_CASE("single feature skips interactions with a warning", "[ebm]") {
    Rng rng(53);
    Matrix X(60, 1);
    std::vector<double> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        X.at(i, 0) = rng.uniform01();
        y[i] = X.at(i, 0);
    }
    const auto model = fit_ebm(X, y, EbmSpec{});
    CHECK(model.pairs.empty());
    REQUIRE(model.warnings.size() == 1);
    CHECK(model.warnings[0].find("interactions skipped") != std::string::npos);
}

TEST_CASE("ebm input validation", "[ebm]") {
    Matrix X(10, 2, 0.5);
    std::vector<double> y(10, 1.0);
    CHECK_THROWS_AS(fit_ebm(X, y, EbmSpec{}), std::invalid_argument); // fewer than 20 rows

    Rng rng(3);
    Matrix X2(40, 2);
    for (auto& v : X2.v) v = rng.uniform01();
    std::vector<double> y2(40, 1.0);
    EbmSpec bad;
    bad.inner_bags = 2;
    CHECK_THROWS_AS(fit_ebm(X2, y2, bad), std::invalid_argument);
    bad = EbmSpec{};
    bad.max_interaction_bins = 512;
    CHECK_THROWS_AS(fit_ebm(X2, y2, bad), std::invalid_argument);
    bad = EbmSpec{};
    bad.outer_bags = 0;
    CHECK_THROWS_AS(fit_ebm(X2, y2, bad), std::invalid_argument);
}

TEST_CASE("constant feature keeps a zero shape function", "[ebm]") {
    Rng rng(59);
    Matrix X(80, 2);
    std::vector<double> y(80);
    for (std::size_t i = 0; i < 80; ++i) {
        X.at(i, 0) = rng.uniform01();
        X.at(i, 1) = 7.25;
        y[i] = X.at(i, 0);
    }
    EbmSpec spec;
    spec.n_interactions = 0;
    const auto model = fit_ebm(X, y, spec);
    REQUIRE(model.main_tables[1].size() == 1);
    CHECK(model.main_tables[1][0] == 0.0);
}
