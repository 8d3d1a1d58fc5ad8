#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rulxai/rulxai.hpp"
#include "support/fixtures.hpp"

using namespace rulxai;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << content;
    return p;
}

std::string row26(int unit, int cycle, double fill) {
    std::string s = std::to_string(unit) + " " + std::to_string(cycle);
    for (int k = 0; k < 24; ++k) s += " " + std::to_string(fill + k);
    return s + "\n";
}

} // namespace

TEST_CASE("whitespace file parses into 26 columns", "[dataset]") {
    const auto p = write_temp("rulxai_t1.txt", row26(1, 1, 0.5) + row26(1, 2, 0.25) + row26(1, 3, 1.5));
    const auto t = load_records(p.string(), RecordFormat::whitespace);
    CHECK(t.values.rows == 3);
    CHECK(t.values.cols == 26);
    CHECK(t.column_names[0] == "unit");
    CHECK(t.column_names[25] == "s21");
}

TEST_CASE("short row is rejected with its line number", "[dataset]") {
    std::string bad = row26(1, 1, 0.5);
    bad += "1 2 0.1 0.2\n"; // 4 fields
    const auto p = write_temp("rulxai_t2.txt", bad);
    try {
        load_records(p.string(), RecordFormat::whitespace);
        FAIL("expected a parse error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("non-numeric field is rejected", "[dataset]") {
    std::string bad = row26(1, 1, 0.5);
    bad[bad.find("0.5")] = 'x';
    const auto p = write_temp("rulxai_t3.txt", bad);
    CHECK_THROWS_AS(load_records(p.string(), RecordFormat::whitespace), std::invalid_argument);
}

TEST_CASE("empty file is rejected", "[dataset]") {
    const auto p = write_temp("rulxai_t4.txt", "\n\n");
    CHECK_THROWS_AS(load_records(p.string(), RecordFormat::whitespace), std::invalid_argument);
    CHECK_THROWS_AS(load_records("/nonexistent/nope.txt", RecordFormat::whitespace), std::invalid_argument);
}

TEST_CASE("cycles must increase within a unit", "[dataset]") {
    const auto p = write_temp("rulxai_t5.txt", row26(1, 2, 0.5) + row26(1, 2, 0.25));
    CHECK_THROWS_AS(load_records(p.string(), RecordFormat::whitespace), std::invalid_argument);
}

TEST_CASE("csv with shuffled header columns is accepted", "[dataset]") {
    std::string header = "cycle,unit,setting1,setting2,setting3";
    for (int i = 1; i <= 21; ++i) header += ",s" + std::to_string(i);
    std::string row = "1,7,0.1,0.2,0.3";
    for (int i = 1; i <= 21; ++i) row += "," + std::to_string(i * 0.5);
    const auto p = write_temp("rulxai_t6.csv", header + "\n" + row + "\n");
    const auto t = load_records(p.string(), RecordFormat::csv);
    CHECK(t.values.rows == 1);
    CHECK(t.values.at(0, 0) == 7.0);  // unit reordered to canonical slot
    CHECK(t.values.at(0, 1) == 1.0);  // cycle
    CHECK(t.values.at(0, 5) == 0.5);  // s1
}

TEST_CASE("bundled sample has 223 rows for unit 1", "[dataset]") {
    const auto t = load_records(fixtures::data_file(), RecordFormat::whitespace);
    std::size_t unit1 = 0;
    for (std::size_t i = 0; i < t.values.rows; ++i)
        if (t.values.at(i, 0) == 1.0) ++unit1;
    CHECK(unit1 == 223);
}

TEST_CASE("rul is max cycle minus cycle", "[dataset]") {
    const auto p = write_temp("rulxai_t7.txt", row26(1, 1, 0.5) + row26(1, 2, 0.25) + row26(1, 3, 1.5) + row26(2, 5, 0.1));
    const auto t = derive_rul(load_records(p.string(), RecordFormat::whitespace));
    REQUIRE(t.column_names.back() == "RUL");
    const std::size_t rul = t.values.cols - 1;
    CHECK(t.values.at(0, rul) == 2.0);
    CHECK(t.values.at(1, rul) == 1.0);
    CHECK(t.values.at(2, rul) == 0.0);
    CHECK(t.values.at(3, rul) == 0.0); // single-row unit
}

TEST_CASE("unit 1 first row has rul 222", "[dataset]") {
    const auto t = derive_rul(load_records(fixtures::data_file(), RecordFormat::whitespace));
    const std::size_t rul = t.values.cols - 1;
    REQUIRE(t.values.at(0, 0) == 1.0);
    REQUIRE(t.values.at(0, 1) == 1.0);
    CHECK(t.values.at(0, rul) == 222.0);
}

TEST_CASE("223 rows split 178 train / 45 test", "[dataset]") {
    const auto& ds = fixtures::engine1_full();
    CHECK(ds.n() == 223);
    CHECK(ds.d() == 25);
    CHECK(ds.train_indices().size() == 178);
    CHECK(ds.test_indices().size() == 45);
    // masks disjoint and exhaustive
    for (std::size_t i = 0; i < ds.n(); ++i) CHECK(ds.train_mask[i] + ds.test_mask[i] == 1);
}

TEST_CASE("normalization maps train columns to [0,1], constants to 0", "[dataset]") {
    const auto& ds = fixtures::engine1_full();
    const auto tr = ds.train_indices();
    for (std::size_t j = 0; j < ds.d(); ++j) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t i : tr) {
            lo = std::min(lo, ds.X.at(i, j));
            hi = std::max(hi, ds.X.at(i, j));
        }
        if (ds.scaler[j].hi > ds.scaler[j].lo) {
            CHECK(lo == 0.0);
            CHECK(hi == 1.0);
        } else {
            CHECK(lo == 0.0);
            CHECK(hi == 0.0);
        }
    }
    for (double v : ds.y) CHECK(v >= -1e-12);
}

TEST_CASE("same seed gives identical datasets, different seed differs", "[dataset]") {
    const auto table = load_records(fixtures::data_file(), RecordFormat::whitespace);
    const auto a = build_dataset(table, 1, true, SplitSpec{0.2, 0});
    const auto b = build_dataset(table, 1, true, SplitSpec{0.2, 0});
    CHECK(a.train_mask == b.train_mask);
    CHECK(a.X.v == b.X.v);
    CHECK(a.y == b.y);
    const auto c = build_dataset(table, 1, true, SplitSpec{0.2, 1});
    CHECK(a.train_mask != c.train_mask);
}

TEST_CASE("rul plus cycle is constant within a unit", "[dataset]") {
    const auto table = load_records(fixtures::data_file(), RecordFormat::whitespace);
    const auto ds = build_dataset(table, 1, false, SplitSpec{});
    const std::size_t cyc = ds.feature_index("cycle");
    const double c0 = ds.y[0] + ds.X.at(0, cyc);
    for (std::size_t i = 0; i < ds.n(); ++i) CHECK(ds.y[i] + ds.X.at(i, cyc) == c0);

    std::vector<double> cycle = ds.X.column(cyc);
    CHECK(std::abs(pearson(cycle, ds.y) + 1.0) < 1e-12);
}

TEST_CASE("scaling preserves the argsort of every column", "[dataset]") {
    const auto table = load_records(fixtures::data_file(), RecordFormat::whitespace);
    const auto raw = build_dataset(table, 1, false, SplitSpec{});
    const auto norm = build_dataset(table, 1, true, SplitSpec{});
    for (std::size_t j = 0; j < raw.d(); ++j)
        CHECK(argsort(raw.X.column(j)) == argsort(norm.X.column(j)));
}

TEST_CASE("unknown unit and bad ratio are rejected", "[dataset]") {
    const auto table = load_records(fixtures::data_file(), RecordFormat::whitespace);
    CHECK_THROWS_AS(build_dataset(table, 99, false, SplitSpec{}), std::invalid_argument);
    CHECK_THROWS_AS(build_dataset(table, 1, false, SplitSpec{1.5, 0}), std::invalid_argument);
    CHECK_THROWS_AS(build_dataset(table, 1, false, SplitSpec{0.0, 0}), std::invalid_argument);
}

TEST_CASE("snapshot records names, scaler and split sizes", "[dataset]") {
    const auto snap = dataset_snapshot(fixtures::engine1_full());
    CHECK(snap["n_train"] == 178);
    CHECK(snap["n_test"] == 45);
    CHECK(snap["seed"] == 0);
    CHECK(snap["feature_names"].size() == 25);
    CHECK(snap["scaler"].contains("cycle"));
}
