#pragma once

// Shared test fixtures: the bundled engine data, lazily fitted models, and
// hand-built exact models.

#include <string>
#include <vector>

#include "rulxai/rulxai.hpp"

#ifndef RULXAI_DATA_DIR
#define RULXAI_DATA_DIR "data"
#endif

namespace fixtures {

inline std::string data_file() { return std::string(RULXAI_DATA_DIR) + "/phm08_sample.txt"; }

// Engine-1 pipeline dataset: unit filter 1, normalized, seed 0, features
// selected by |pearson| > 0.01.
inline const rulxai::TabularDataset& engine1() {
    static const rulxai::TabularDataset ds = [] {
        const auto table = rulxai::load_records(data_file(), rulxai::RecordFormat::whitespace);
        const auto full = rulxai::build_dataset(table, 1, true, rulxai::SplitSpec{});
        const auto selected = rulxai::select_features(rulxai::pearson_scores(full), 0.01);
        return rulxai::select_columns(full, selected);
    }();
    return ds;
}

// Engine-1 dataset before column selection (25 features).
inline const rulxai::TabularDataset& engine1_full() {
    static const rulxai::TabularDataset ds = [] {
        const auto table = rulxai::load_records(data_file(), rulxai::RecordFormat::whitespace);
        return rulxai::build_dataset(table, 1, true, rulxai::SplitSpec{});
    }();
    return ds;
}

inline const rulxai::FittedModel& engine1_tree() {
    static const rulxai::FittedModel m = rulxai::fit_model_tree(engine1(), rulxai::TreeSpec{});
    return m;
}
inline const rulxai::FittedModel& engine1_figs() {
    static const rulxai::FittedModel m = rulxai::fit_model_figs(engine1(), rulxai::FigsSpec{});
    return m;
}
inline const rulxai::FittedModel& engine1_ebm() {
    static const rulxai::FittedModel m = rulxai::fit_model_ebm(engine1(), rulxai::EbmSpec{});
    return m;
}
inline const rulxai::FittedModel& engine1_relu() {
    static const rulxai::FittedModel m = rulxai::fit_model_relu(engine1(), rulxai::ReluDnnSpec{});
    return m;
}

inline std::vector<const rulxai::FittedModel*> engine1_models() {
    return {&engine1_tree(), &engine1_figs(), &engine1_ebm(), &engine1_relu()};
}

// Synthetic dataset wrapper with a seeded shuffle/prefix split.
inline rulxai::TabularDataset make_dataset(const rulxai::Matrix& X, const std::vector<double>& y,
                                           double test_ratio = 0.25, std::uint64_t seed = 0) {
    rulxai::TabularDataset ds;
    for (std::size_t j = 0; j < X.cols; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    ds.X = X;
    ds.y = y;
    ds.unit_ids.assign(X.rows, 1);
    ds.seed = seed;
    std::vector<std::size_t> order(X.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rulxai::Rng rng(seed);
    rng.shuffle(order);
    const std::size_t n_train = static_cast<std::size_t>((1.0 - test_ratio) * static_cast<double>(X.rows));
    ds.train_mask.assign(X.rows, 0);
    ds.test_mask.assign(X.rows, 0);
    for (std::size_t k = 0; k < X.rows; ++k) (k < n_train ? ds.train_mask : ds.test_mask)[order[k]] = 1;
    return ds;
}

// Exact linear model w.x + c realized as a two-layer ReLU net whose single
// hidden unit stays strictly positive over the probe range.
inline rulxai::FittedModel linear_model(const std::vector<double>& w, double c,
                                        const std::vector<std::string>& feature_names, double shift = 1000.0) {
    rulxai::ReluDnn net;
    net.spec.layer_sizes = {1};
    net.input_dim = w.size();
    rulxai::Matrix W0(1, w.size());
    for (std::size_t j = 0; j < w.size(); ++j) W0.at(0, j) = w[j];
    net.W.push_back(W0);
    net.b.push_back({shift});
    rulxai::Matrix W1(1, 1);
    W1.at(0, 0) = 1.0;
    net.W.push_back(W1);
    net.b.push_back({c - shift});

    rulxai::FittedModel m;
    m.kind = rulxai::ModelKind::relu_dnn;
    m.impl = std::move(net);
    m.manifest.kind = rulxai::ModelKind::relu_dnn;
    m.manifest.spec = rulxai::to_json(rulxai::ReluDnnSpec{{1}});
    m.manifest.feature_names = feature_names;
    return m;
}

// Model that ignores its inputs entirely.
inline rulxai::FittedModel constant_model(double c, const std::vector<std::string>& feature_names) {
    rulxai::ReluDnn net;
    net.spec.layer_sizes = {1};
    net.input_dim = feature_names.size();
    net.W.push_back(rulxai::Matrix(1, feature_names.size(), 0.0));
    net.b.push_back({1.0});
    net.W.push_back(rulxai::Matrix(1, 1, 0.0));
    net.b.push_back({c});

    rulxai::FittedModel m;
    m.kind = rulxai::ModelKind::relu_dnn;
    m.impl = std::move(net);
    m.manifest.kind = rulxai::ModelKind::relu_dnn;
    m.manifest.spec = rulxai::to_json(rulxai::ReluDnnSpec{{1}});
    m.manifest.feature_names = feature_names;
    return m;
}

inline std::vector<std::string> feature_names(std::size_t d) {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < d; ++j) out.push_back("f" + std::to_string(j));
    return out;
}

} // namespace fixtures
