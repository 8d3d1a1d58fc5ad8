#include <catch2/catch_amalgamated.hpp>

#include "rulxai/rulxai.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace rulxai;

TEST_CASE("pearson: cycle vs rul is exactly -1, constants are 0", "[feature_select]") {
    const auto& ds = fixtures::engine1_full();
    const auto t = pearson_scores(ds);
    const std::size_t cyc = ds.feature_index("cycle");
    CHECK(std::abs(t.scores[cyc] + 1.0) < 1e-12);
    CHECK(t.scores[ds.feature_index("s1")] == 0.0);
    CHECK(t.scores[ds.feature_index("setting3")] == 0.0);
    for (double s : t.scores) {
        CHECK(std::isfinite(s));
        CHECK(std::abs(s) <= 1.0);
    }
}

TEST_CASE("pearson matches the textbook oracle to 1e-12", "[feature_select]") {
    const auto& ds = fixtures::engine1_full();
    const auto t = pearson_scores(ds);
    const auto tr = ds.train_indices();
    const auto yt = ds.y_at(tr);
    for (const char* name : {"s2", "s7", "s9"}) {
        const std::size_t j = ds.feature_index(name);
        std::vector<double> col(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) col[i] = ds.X.at(tr[i], j);
        CHECK(std::abs(t.scores[j] - oracle::pearson(col, yt)) < 1e-12);
    }
}

TEST_CASE("pearson is symmetric in its arguments", "[feature_select]") {
    Rng rng(3);
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x[i] = rng.gaussian();
        y[i] = 0.5 * x[i] + rng.gaussian();
    }
    CHECK(pearson(x, y) == pearson(y, x));
}

TEST_CASE("distance correlation identity and affine invariance", "[feature_select]") {
    Rng rng(11);
    std::vector<double> x(60);
    for (auto& v : x) v = rng.gaussian();
    CHECK(std::abs(oracle::distance_correlation(x, x) - 1.0) < 1e-12);

    std::vector<double> ax(60);
    for (std::size_t i = 0; i < 60; ++i) ax[i] = -2.5 * x[i] + 7.0;
    Matrix X(60, 1);
    for (std::size_t i = 0; i < 60; ++i) X.at(i, 0) = x[i];
    auto ds = fixtures::make_dataset(X, ax, 0.25, 0);
    // evaluate via the library on the train split
    const auto t = distance_correlation(ds);
    CHECK(std::abs(t.scores[0] - 1.0) < 1e-9);
}

TEST_CASE("distance correlation of engine-1 cycle vs rul is 1", "[feature_select]") {
    const auto t = distance_correlation(fixtures::engine1_full());
    const std::size_t cyc = fixtures::engine1_full().feature_index("cycle");
    CHECK(std::abs(t.scores[cyc] - 1.0) < 1e-9);
    CHECK(t.scores[fixtures::engine1_full().feature_index("s1")] == 0.0);
    for (double s : t.scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0 + 1e-12);
    }
}

TEST_CASE("distance correlation matches the definitional oracle on n=50", "[feature_select]") {
    Rng rng(5);
    const std::size_t n = 50;
    Matrix X(n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        X.at(i, 0) = rng.gaussian();
        X.at(i, 1) = rng.uniform01();
        y[i] = std::sin(2.0 * X.at(i, 0)) + 0.3 * rng.gaussian();
    }
    auto ds = fixtures::make_dataset(X, y, 0.02, 0); // keep 49 rows in train
    const auto t = distance_correlation(ds);
    const auto tr = ds.train_indices();
    const auto yt = ds.y_at(tr);
    for (std::size_t j = 0; j < 2; ++j) {
        std::vector<double> col(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) col[i] = ds.X.at(tr[i], j);
        CHECK(std::abs(t.scores[j] - oracle::distance_correlation(col, yt)) < 1e-12);
    }
}

TEST_CASE("gbdt importance concentrates on the signal feature", "[feature_select]") {
    Rng rng(17);
    const std::size_t n = 200;
    Matrix X(n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        X.at(i, 0) = rng.uniform01();
        X.at(i, 1) = rng.uniform01();
        y[i] = (X.at(i, 0) > 0.5 ? 10.0 : 0.0) + 0.01 * rng.gaussian();
    }
    const auto t = gbdt_importance(fixtures::make_dataset(X, y, 0.1, 0));
    CHECK(t.scores[0] > 0.95);
    CHECK(std::abs(t.scores[0] + t.scores[1] - 1.0) < 1e-12);
}

TEST_CASE("gbdt importance is all zero for a constant target", "[feature_select]") {
    Rng rng(2);
    Matrix X(50, 2);
    for (auto& v : X.v) v = rng.uniform01();
    std::vector<double> y(50, 3.25);
    const auto t = gbdt_importance(fixtures::make_dataset(X, y, 0.1, 0));
    CHECK(t.scores[0] == 0.0);
    CHECK(t.scores[1] == 0.0);
}

TEST_CASE("gbdt importance ranks cycle first on engine-1", "[feature_select]") {
    const auto& ds = fixtures::engine1_full();
    const auto t = gbdt_importance(ds);
    const std::size_t cyc = ds.feature_index("cycle");
    for (std::size_t j = 0; j < t.scores.size(); ++j)
        if (j != cyc) CHECK(t.scores[cyc] > t.scores[j]);
}

TEST_CASE("rcit: direct dependence with empty conditioning set", "[feature_select]") {
    Rng rng(23);
    const std::size_t n = 60;
    Matrix X(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        X.at(i, 0) = rng.gaussian();
        y[i] = X.at(i, 0);
    }
    RcitConfig cfg;
    cfg.num_fourier_features = 20;
    cfg.num_permutations = 199;
    cfg.alpha = 0.01;
    const auto t = rcit_dependence(fixtures::make_dataset(X, y, 0.1, 0), cfg);
    CHECK(t.p_values[0] < cfg.alpha);
    CHECK(t.p_values[0] <= 1.0 / (cfg.num_permutations + 1.0) + 1e-12);
}

TEST_CASE("rcit: conditionally independent feature is not flagged", "[feature_select]") {
    // y = f(Z), Xj = g(Z) + noise: marginally correlated, independent given Z
    int accept = 0;
    const int runs = 20;
    for (int run = 0; run < runs; ++run) {
        Rng rng(100 + run);
        const std::size_t n = 80;
        Matrix X(n, 2); // column 0 = Xj, column 1 = Z
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = rng.gaussian();
            X.at(i, 1) = z;
            X.at(i, 0) = z + rng.gaussian();
            y[i] = z;
        }
        RcitConfig cfg;
        cfg.num_fourier_features = 15;
        cfg.num_permutations = 99;
        cfg.seed = 1000 + run;
        const auto t = rcit_dependence(fixtures::make_dataset(X, y, 0.1, run), cfg);
        if (t.p_values[0] > 0.05) ++accept;
    }
    CHECK(accept >= 18); // p > 0.05 with probability >= 0.9 over seeds
}

TEST_CASE("rcit null p-values are not anti-conservative", "[feature_select]") {
    int below = 0;
    const int runs = 200;
    for (int run = 0; run < runs; ++run) {
        Rng rng(5000 + run);
        const std::size_t n = 40;
        Matrix X(n, 2);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = rng.gaussian();
            X.at(i, 1) = z;
            X.at(i, 0) = 0.8 * z + rng.gaussian();
            y[i] = z + 0.3 * rng.gaussian();
        }
        RcitConfig cfg;
        cfg.num_fourier_features = 10;
        cfg.num_permutations = 59;
        cfg.seed = 7000 + run;
        const auto t = rcit_dependence(fixtures::make_dataset(X, y, 0.05, run), cfg);
        if (t.p_values[0] < 0.05) ++below;
    }
    CHECK(below <= 20); // fraction of p < 0.05 over 200 runs <= 0.10
}

TEST_CASE("rcit flags cycle on engine-1 at alpha 0.01 with kernel size 100", "[feature_select]") {
    const auto& ds = fixtures::engine1();
    RcitConfig cfg; // defaults: 100 fourier features, alpha 0.01, 200 permutations
    const auto t = rcit_dependence(ds, cfg);
    const std::size_t cyc = ds.feature_index("cycle");
    CHECK(t.p_values[cyc] < cfg.alpha);
    CHECK(t.scores[cyc] == 1.0 - t.p_values[cyc]);

    RcitConfig cfg_fi = cfg;
    cfg_fi.initialization = "feature_importance";
    const auto t2 = rcit_dependence(ds, cfg_fi);
    CHECK(t2.p_values[cyc] < cfg.alpha);
}

TEST_CASE("rcit rejects bad configuration", "[feature_select]") {
    const auto& ds = fixtures::engine1();
    RcitConfig cfg;
    cfg.num_fourier_features = 0;
    CHECK_THROWS_AS(rcit_dependence(ds, cfg), std::invalid_argument);

    Rng rng(1);
    Matrix X(10, 1);
    for (auto& v : X.v) v = rng.uniform01();
    std::vector<double> y(10, 1.0);
    CHECK_THROWS_AS(rcit_dependence(fixtures::make_dataset(X, y, 0.1, 0), RcitConfig{}), std::invalid_argument);
}

TEST_CASE("select_features applies the threshold rule", "[feature_select]") {
    FeatureScoreTable t;
    t.feature_names = {"A", "B", "C"};
    t.scores = {0.5, 0.005, -0.7};
    t.method = "pearson";
    CHECK(select_features(t, 0.01) == std::vector<std::string>{"C", "A"});
    CHECK(select_features(t, 2.0).empty());

    // tie on |score| keeps ascending feature index
    t.scores = {0.5, -0.5, 0.2};
    CHECK(select_features(t, 0.1) == std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("selection on engine-1 pearson starts with cycle", "[feature_select]") {
    const auto sel = select_features(pearson_scores(fixtures::engine1_full()), 0.01);
    REQUIRE(!sel.empty());
    CHECK(sel[0] == "cycle");
    CHECK(sel.size() <= 25);
}

TEST_CASE("eda summary: symmetric unit-diagonal correlation matrix", "[feature_select]") {
    const auto& ds = fixtures::engine1_full();
    const auto s = eda_summary(ds);
    const std::size_t m = s.names.size();
    REQUIRE(m == 26); // 25 features + RUL
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) CHECK(s.correlation.at(a, b) == s.correlation.at(b, a));

    const std::size_t cyc = ds.feature_index("cycle");
    CHECK(s.correlation.at(cyc, cyc) == 1.0);
    CHECK(s.correlation.at(ds.feature_index("s1"), ds.feature_index("s1")) == 0.0);
    CHECK(std::abs(s.correlation.at(cyc, m - 1) + 1.0) < 1e-12); // (cycle, RUL)

    for (const auto& counts : s.hist_counts) {
        CHECK(counts.size() == 20);
        int total = 0;
        for (int c : counts) total += c;
        CHECK(total == static_cast<int>(ds.n()));
    }
    CHECK(s.cycle_rul.size() == ds.n());
}

TEST_CASE("score tables serialize to csv and json", "[feature_select]") {
    const auto t = pearson_scores(fixtures::engine1_full());
    const auto csv = score_table_csv(t);
    CHECK(csv.rfind("feature,score,method\n", 0) == 0);
    CHECK(csv.find("cycle,") != std::string::npos);
    const auto j = score_table_json(t);
    CHECK(j["method"] == "pearson");
    CHECK(j["scores"].size() == 25);
}
