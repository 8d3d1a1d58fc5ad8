#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulxai/common.hpp"
#include "rulxai/rng.hpp"

namespace rulxai {

// PHM08-style trajectory table: unit, cycle, setting1..3, s1..s21.
inline const std::vector<std::string>& phm08_column_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n{"unit", "cycle", "setting1", "setting2", "setting3"};
        for (int i = 1; i <= 21; ++i) n.push_back("s" + std::to_string(i));
        return n;
    }();
    return names;
}

struct RawRecordTable {
    std::vector<std::string> column_names;
    Matrix values;

    std::size_t column_index(const std::string& name) const {
        for (std::size_t j = 0; j < column_names.size(); ++j)
            if (column_names[j] == name) return j;
        throw std::invalid_argument("unknown column: " + name);
    }
    bool has_column(const std::string& name) const {
        return std::find(column_names.begin(), column_names.end(), name) != column_names.end();
    }
};

enum class RecordFormat { whitespace, csv };

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        return pos == tok.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
    }
    return out;
}

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline void validate_table(const RawRecordTable& t) {
    const std::size_t unit_col = 0, cycle_col = 1;
    std::map<long long, long long> last_cycle;
    for (std::size_t i = 0; i < t.values.rows; ++i) {
        const double u = t.values.at(i, unit_col);
        const double c = t.values.at(i, cycle_col);
        if (u <= 0.0 || u != std::floor(u))
            throw std::invalid_argument("row " + std::to_string(i + 1) + ": unit id must be a positive integer");
        if (c <= 0.0 || c != std::floor(c))
            throw std::invalid_argument("row " + std::to_string(i + 1) + ": cycle must be a positive integer");
        const long long ui = static_cast<long long>(u), ci = static_cast<long long>(c);
        auto it = last_cycle.find(ui);
        if (it != last_cycle.end() && ci <= it->second)
            throw std::invalid_argument("row " + std::to_string(i + 1) + ": cycles not strictly increasing within unit " +
                                        std::to_string(ui));
        last_cycle[ui] = ci;
    }
}

} // namespace detail

// Loads a 26-column trajectory file. Whitespace format is the PHM08 native
// layout (no header); CSV requires a header row matched by column name in
// any order. Parse errors carry the 1-based line number.
inline RawRecordTable load_records(const std::string& path, RecordFormat format) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);

    const auto& canonical = phm08_column_names();
    RawRecordTable t;
    t.column_names = canonical;

    std::vector<double> data;
    std::string line;
    std::size_t line_no = 0;
    std::size_t n_rows = 0;
    std::vector<std::size_t> csv_order; // canonical index -> file column

    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = (format == RecordFormat::csv) ? detail::split_csv(line) : detail::split_ws(line);
        if (tokens.empty() || (tokens.size() == 1 && tokens[0].empty())) continue;

        if (format == RecordFormat::csv && csv_order.empty()) {
            // header row
            csv_order.assign(canonical.size(), 0);
            if (tokens.size() != canonical.size())
                throw std::invalid_argument("line " + std::to_string(line_no) + ": CSV header must have " +
                                            std::to_string(canonical.size()) + " columns");
            for (std::size_t k = 0; k < canonical.size(); ++k) {
                auto it = std::find(tokens.begin(), tokens.end(), canonical[k]);
                if (it == tokens.end())
                    throw std::invalid_argument("line " + std::to_string(line_no) + ": CSV header missing column '" +
                                                canonical[k] + "'");
                csv_order[k] = static_cast<std::size_t>(it - tokens.begin());
            }
            continue;
        }

        if (tokens.size() != canonical.size())
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(canonical.size()) + " fields, got " +
                                        std::to_string(tokens.size()));
        for (std::size_t k = 0; k < canonical.size(); ++k) {
            const std::string& tok = (format == RecordFormat::csv) ? tokens[csv_order[k]] : tokens[k];
            double val = 0.0;
            if (!detail::parse_double(tok, val))
                throw std::invalid_argument("line " + std::to_string(line_no) + ": field '" + tok +
                                            "' is not a finite number");
            data.push_back(val);
        }
        ++n_rows;
    }
    if (n_rows == 0) throw std::invalid_argument("file has no data rows: " + path);

    t.values.rows = n_rows;
    t.values.cols = canonical.size();
    t.values.v = std::move(data);
    detail::validate_table(t);
    return t;
}

// RUL = max observed cycle within the unit minus the row's cycle.
inline RawRecordTable derive_rul(const RawRecordTable& table) {
    if (table.has_column("RUL")) return table;
    const std::size_t unit_col = table.column_index("unit");
    const std::size_t cycle_col = table.column_index("cycle");

    std::map<long long, double> max_cycle;
    for (std::size_t i = 0; i < table.values.rows; ++i) {
        const long long u = static_cast<long long>(table.values.at(i, unit_col));
        max_cycle[u] = std::max(max_cycle.count(u) ? max_cycle[u] : 0.0, table.values.at(i, cycle_col));
    }

    RawRecordTable out;
    out.column_names = table.column_names;
    out.column_names.push_back("RUL");
    out.values.rows = table.values.rows;
    out.values.cols = table.values.cols + 1;
    out.values.v.resize(out.values.rows * out.values.cols);
    for (std::size_t i = 0; i < table.values.rows; ++i) {
        std::copy(table.values.row(i), table.values.row(i) + table.values.cols, out.values.row(i));
        const long long u = static_cast<long long>(table.values.at(i, unit_col));
        out.values.at(i, table.values.cols) = max_cycle[u] - table.values.at(i, cycle_col);
    }
    return out;
}

struct SplitSpec {
    double test_ratio = 0.2;
    std::uint64_t seed = 0;
};

struct MinMax {
    double lo = 0.0;
    double hi = 0.0;
};

struct TabularDataset {
    std::vector<std::string> feature_names;
    Matrix X;
    std::vector<double> y;
    std::vector<long long> unit_ids;
    std::vector<std::uint8_t> train_mask, test_mask;
    bool normalized = false;
    std::vector<MinMax> scaler; // per feature, train-split stats; empty when not normalized
    MinMax target_scale;        // train-split RUL range when normalized
    std::uint64_t seed = 0;

    std::size_t n() const { return X.rows; }
    std::size_t d() const { return X.cols; }

    std::vector<std::size_t> train_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n(); ++i)
            if (train_mask[i]) idx.push_back(i);
        return idx;
    }
    std::vector<std::size_t> test_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n(); ++i)
            if (test_mask[i]) idx.push_back(i);
        return idx;
    }
    Matrix x_train() const { return X.gather_rows(train_indices()); }
    Matrix x_test() const { return X.gather_rows(test_indices()); }
    std::vector<double> y_at(const std::vector<std::size_t>& idx) const {
        std::vector<double> out(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) out[i] = y[idx[i]];
        return out;
    }
    std::vector<double> y_train() const { return y_at(train_indices()); }
    std::vector<double> y_test() const { return y_at(test_indices()); }

    std::size_t feature_index(const std::string& name) const {
        for (std::size_t j = 0; j < d(); ++j)
            if (feature_names[j] == name) return j;
        throw std::invalid_argument("unknown feature: " + name);
    }
};

// Builds the modeling dataset: features {cycle, setting1..3, s1..s21},
// target RUL, seeded shuffle + prefix split, optional train-fit min-max
// scaling applied to both splits (test values are not clipped).
inline TabularDataset build_dataset(const RawRecordTable& table_in, std::optional<long long> unit_filter,
                                    bool normalize, const SplitSpec& split) {
    if (!(split.test_ratio > 0.0 && split.test_ratio < 1.0))
        throw std::invalid_argument("test_ratio must lie in (0,1)");

    const RawRecordTable table = derive_rul(table_in);
    const std::size_t unit_col = table.column_index("unit");
    const std::size_t rul_col = table.column_index("RUL");

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < table.values.rows; ++i) {
        const long long u = static_cast<long long>(table.values.at(i, unit_col));
        if (!unit_filter || u == *unit_filter) keep.push_back(i);
    }
    if (keep.empty()) throw std::invalid_argument("unit not found: " + std::to_string(*unit_filter));

    TabularDataset ds;
    ds.seed = split.seed;
    for (const auto& name : table.column_names)
        if (name != "unit" && name != "RUL") ds.feature_names.push_back(name);

    const std::size_t n = keep.size(), d = ds.feature_names.size();
    ds.X = Matrix(n, d);
    ds.y.resize(n);
    ds.unit_ids.resize(n);
    std::vector<std::size_t> feat_cols;
    for (const auto& name : ds.feature_names) feat_cols.push_back(table.column_index(name));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) ds.X.at(i, j) = table.values.at(keep[i], feat_cols[j]);
        ds.y[i] = table.values.at(keep[i], rul_col);
        ds.unit_ids[i] = static_cast<long long>(table.values.at(keep[i], unit_col));
    }

    // seeded uniform shuffle, then prefix split
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(split.seed);
    rng.shuffle(order);
    const std::size_t n_train = static_cast<std::size_t>(std::floor((1.0 - split.test_ratio) * static_cast<double>(n)));
    ds.train_mask.assign(n, 0);
    ds.test_mask.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k)
        (k < n_train ? ds.train_mask : ds.test_mask)[order[k]] = 1;

    if (normalize) {
        ds.normalized = true;
        ds.scaler.resize(d);
        const auto tr = ds.train_indices();
        for (std::size_t j = 0; j < d; ++j) {
            double lo = ds.X.at(tr[0], j), hi = lo;
            for (std::size_t i : tr) {
                lo = std::min(lo, ds.X.at(i, j));
                hi = std::max(hi, ds.X.at(i, j));
            }
            ds.scaler[j] = {lo, hi};
            const double range = hi - lo;
            for (std::size_t i = 0; i < n; ++i)
                ds.X.at(i, j) = (range > 0.0) ? (ds.X.at(i, j) - lo) / range : 0.0;
        }
        double ylo = ds.y[tr[0]], yhi = ylo;
        for (std::size_t i : tr) {
            ylo = std::min(ylo, ds.y[i]);
            yhi = std::max(yhi, ds.y[i]);
        }
        ds.target_scale = {ylo, yhi};
        const double yrange = yhi - ylo;
        for (std::size_t i = 0; i < n; ++i)
            ds.y[i] = (yrange > 0.0) ? (ds.y[i] - ylo) / yrange : 0.0;
    }
    return ds;
}

// Restriction of a dataset to a feature subset (masks, target and scaling
// metadata carried over). Used after feature selection.
inline TabularDataset select_columns(const TabularDataset& ds, const std::vector<std::string>& names) {
    TabularDataset out;
    out.feature_names = names;
    out.y = ds.y;
    out.unit_ids = ds.unit_ids;
    out.train_mask = ds.train_mask;
    out.test_mask = ds.test_mask;
    out.normalized = ds.normalized;
    out.target_scale = ds.target_scale;
    out.seed = ds.seed;
    out.X = Matrix(ds.n(), names.size());
    if (ds.normalized) out.scaler.resize(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        const std::size_t src = ds.feature_index(names[j]);
        for (std::size_t i = 0; i < ds.n(); ++i) out.X.at(i, j) = ds.X.at(i, src);
        if (ds.normalized) out.scaler[j] = ds.scaler[src];
    }
    return out;
}

// Reproducibility snapshot, see README for the schema.
inline nlohmann::json dataset_snapshot(const TabularDataset& ds) {
    nlohmann::json scaler = nlohmann::json::object();
    if (ds.normalized) {
        for (std::size_t j = 0; j < ds.d(); ++j)
            scaler[ds.feature_names[j]] = {ds.scaler[j].lo, ds.scaler[j].hi};
        scaler["__target__"] = {ds.target_scale.lo, ds.target_scale.hi};
    }
    return nlohmann::json{{"feature_names", ds.feature_names},
                          {"scaler", scaler},
                          {"n_train", ds.train_indices().size()},
                          {"n_test", ds.test_indices().size()},
                          {"seed", ds.seed}};
}

// FNV-1a over the raw matrix bytes plus row count; cheap dataset identity
// for run manifests.
inline std::string dataset_fingerprint(const TabularDataset& ds) {
    std::uint64_t h = 1469598103934665603ULL;
    auto eat = [&h](const void* p, std::size_t len) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    eat(ds.X.v.data(), ds.X.v.size() * sizeof(double));
    eat(ds.y.data(), ds.y.size() * sizeof(double));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace rulxai
