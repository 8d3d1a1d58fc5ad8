#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulxai/common.hpp"
#include "rulxai/dataset.hpp"
#include "rulxai/ebm.hpp"
#include "rulxai/figs.hpp"
#include "rulxai/relu_dnn.hpp"
#include "rulxai/tree.hpp"

namespace rulxai {

enum class ModelKind { tree, figs, ebm, relu_dnn };

inline std::string kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::tree: return "tree";
        case ModelKind::figs: return "figs";
        case ModelKind::ebm: return "ebm";
        case ModelKind::relu_dnn: return "relu_dnn";
    }
    return "?";
}

inline ModelKind kind_from_name(const std::string& s) {
    if (s == "tree") return ModelKind::tree;
    if (s == "figs") return ModelKind::figs;
    if (s == "ebm") return ModelKind::ebm;
    if (s == "relu_dnn") return ModelKind::relu_dnn;
    throw std::invalid_argument("unknown model kind: " + s);
}

// ---- spec <-> json ----

inline nlohmann::json to_json(const TreeSpec& s) {
    return {{"criterion", "squared_error"},
            {"max_depth", s.max_depth},
            {"min_samples_leaf", s.min_samples_leaf},
            {"prune_alpha", s.prune_alpha}};
}
inline TreeSpec tree_spec_from_json(const nlohmann::json& j) {
    TreeSpec s;
    s.max_depth = j.value("max_depth", s.max_depth);
    s.min_samples_leaf = j.value("min_samples_leaf", s.min_samples_leaf);
    s.prune_alpha = j.value("prune_alpha", s.prune_alpha);
    return s;
}

inline nlohmann::json to_json(const FigsSpec& s) {
    return {{"max_depth", s.max_depth}, {"max_splits", s.max_splits}};
}
inline FigsSpec figs_spec_from_json(const nlohmann::json& j) {
    FigsSpec s;
    s.max_depth = j.value("max_depth", s.max_depth);
    s.max_splits = j.value("max_splits", s.max_splits);
    return s;
}

inline nlohmann::json to_json(const EbmSpec& s) {
    return {{"n_interactions", s.n_interactions},
            {"outer_bags", s.outer_bags},
            {"inner_bags", s.inner_bags},
            {"max_bins", s.max_bins},
            {"max_interaction_bins", s.max_interaction_bins},
            {"max_rounds", s.max_rounds},
            {"early_stop_rounds", s.early_stop_rounds},
            {"early_stop_tol", s.early_stop_tol},
            {"learning_rate", s.learning_rate},
            {"validation_fraction", s.validation_fraction},
            {"seed", s.seed}};
}
inline EbmSpec ebm_spec_from_json(const nlohmann::json& j) {
    EbmSpec s;
    s.n_interactions = j.value("n_interactions", s.n_interactions);
    s.outer_bags = j.value("outer_bags", s.outer_bags);
    s.inner_bags = j.value("inner_bags", s.inner_bags);
    s.max_bins = j.value("max_bins", s.max_bins);
    s.max_interaction_bins = j.value("max_interaction_bins", s.max_interaction_bins);
    s.max_rounds = j.value("max_rounds", s.max_rounds);
    s.early_stop_rounds = j.value("early_stop_rounds", s.early_stop_rounds);
    s.early_stop_tol = j.value("early_stop_tol", s.early_stop_tol);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.validation_fraction = j.value("validation_fraction", s.validation_fraction);
    s.seed = j.value("seed", s.seed);
    return s;
}

inline nlohmann::json to_json(const ReluDnnSpec& s) {
    return {{"layer_sizes", s.layer_sizes},
            {"max_epochs", s.max_epochs},
            {"learning_rate", s.learning_rate},
            {"batch_size", s.batch_size},
            {"l1_regularization", s.l1_regularization},
            {"dropout", s.dropout},
            {"early_stop_epochs", s.early_stop_epochs},
            {"seed", s.seed},
            {"validation_fraction", s.validation_fraction}};
}
inline ReluDnnSpec relu_spec_from_json(const nlohmann::json& j) {
    ReluDnnSpec s;
    if (j.contains("layer_sizes")) s.layer_sizes = j["layer_sizes"].get<std::vector<int>>();
    s.max_epochs = j.value("max_epochs", s.max_epochs);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.batch_size = j.value("batch_size", s.batch_size);
    s.l1_regularization = j.value("l1_regularization", s.l1_regularization);
    s.dropout = j.value("dropout", s.dropout);
    s.early_stop_epochs = j.value("early_stop_epochs", s.early_stop_epochs);
    s.seed = j.value("seed", s.seed);
    s.validation_fraction = j.value("validation_fraction", s.validation_fraction);
    return s;
}

struct TrainingManifest {
    ModelKind kind = ModelKind::tree;
    nlohmann::json spec;
    std::uint64_t seed = 0;
    std::vector<std::string> feature_names;
};

// One trained regressor of any kind behind a uniform predict contract.
struct FittedModel {
    ModelKind kind = ModelKind::tree;
    std::variant<DecisionTree, FigsModel, EbmModel, ReluDnn> impl;
    TrainingManifest manifest;

    std::size_t n_features() const { return manifest.feature_names.size(); }

    double predict_row(const double* x) const {
        return std::visit([&](const auto& m) { return m.predict_row(x); }, impl);
    }
    std::vector<double> predict(const Matrix& X) const {
        if (X.rows > 0 && X.cols != n_features())
            throw std::invalid_argument("predict: expected " + std::to_string(n_features()) + " features, got " +
                                        std::to_string(X.cols));
        return std::visit([&](const auto& m) { return m.predict(X); }, impl);
    }

    const DecisionTree& as_tree() const {
        if (kind != ModelKind::tree) throw std::invalid_argument("model is not a tree");
        return std::get<DecisionTree>(impl);
    }
    const FigsModel& as_figs() const {
        if (kind != ModelKind::figs) throw std::invalid_argument("model is not a figs model");
        return std::get<FigsModel>(impl);
    }
    const EbmModel& as_ebm() const {
        if (kind != ModelKind::ebm) throw std::invalid_argument("model is not an ebm");
        return std::get<EbmModel>(impl);
    }
    const ReluDnn& as_relu() const {
        if (kind != ModelKind::relu_dnn) throw std::invalid_argument("model is not a relu_dnn");
        return std::get<ReluDnn>(impl);
    }
};

// ---- fitting against a dataset's training split ----

inline FittedModel fit_model_tree(const TabularDataset& ds, const TreeSpec& spec) {
    const auto tr = ds.train_indices();
    if (tr.size() < 2 * static_cast<std::size_t>(spec.min_samples_leaf))
        throw std::invalid_argument("fit_model_tree: needs at least 2*min_samples_leaf training rows");
    FittedModel m;
    m.kind = ModelKind::tree;
    m.impl = fit_decision_tree(ds.x_train(), ds.y_train(), spec);
    m.manifest = {ModelKind::tree, to_json(spec), ds.seed, ds.feature_names};
    return m;
}

inline FittedModel fit_model_figs(const TabularDataset& ds, const FigsSpec& spec) {
    if (ds.train_indices().size() < 10)
        throw std::invalid_argument("fit_model_figs: needs at least 10 training rows");
    FittedModel m;
    m.kind = ModelKind::figs;
    m.impl = fit_figs(ds.x_train(), ds.y_train(), spec);
    m.manifest = {ModelKind::figs, to_json(spec), ds.seed, ds.feature_names};
    return m;
}

inline FittedModel fit_model_ebm(const TabularDataset& ds, const EbmSpec& spec) {
    FittedModel m;
    m.kind = ModelKind::ebm;
    m.impl = fit_ebm(ds.x_train(), ds.y_train(), spec);
    m.manifest = {ModelKind::ebm, to_json(spec), ds.seed, ds.feature_names};
    return m;
}

inline FittedModel fit_model_relu(const TabularDataset& ds, const ReluDnnSpec& spec) {
    FittedModel m;
    m.kind = ModelKind::relu_dnn;
    m.impl = fit_relu_dnn(ds.x_train(), ds.y_train(), spec);
    m.manifest = {ModelKind::relu_dnn, to_json(spec), ds.seed, ds.feature_names};
    return m;
}

// Retrains the same kind+spec on new rows; used by the conformal
// reliability test which refits on a proper-train subset.
inline FittedModel refit(const TrainingManifest& manifest, const Matrix& X, const std::vector<double>& y) {
    FittedModel m;
    m.kind = manifest.kind;
    m.manifest = manifest;
    switch (manifest.kind) {
        case ModelKind::tree: m.impl = fit_decision_tree(X, y, tree_spec_from_json(manifest.spec)); break;
        case ModelKind::figs: m.impl = fit_figs(X, y, figs_spec_from_json(manifest.spec)); break;
        case ModelKind::ebm: m.impl = fit_ebm(X, y, ebm_spec_from_json(manifest.spec)); break;
        case ModelKind::relu_dnn: m.impl = fit_relu_dnn(X, y, relu_spec_from_json(manifest.spec)); break;
    }
    return m;
}

// ---- model (de)serialization ----

namespace model_io {

inline nlohmann::json nodes_to_json(const std::vector<TreeNode>& nodes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& nd : nodes)
        arr.push_back({{"feature", nd.feature},
                       {"threshold", nd.threshold},
                       {"left", nd.left},
                       {"right", nd.right},
                       {"value", nd.value},
                       {"n_samples", nd.n_samples},
                       {"gain", nd.gain}});
    return arr;
}

inline std::vector<TreeNode> nodes_from_json(const nlohmann::json& arr) {
    std::vector<TreeNode> nodes;
    for (const auto& j : arr) {
        TreeNode nd;
        nd.feature = j["feature"].get<int>();
        nd.threshold = j["threshold"].get<double>();
        nd.left = j["left"].get<int>();
        nd.right = j["right"].get<int>();
        nd.value = j["value"].get<double>();
        nd.n_samples = j["n_samples"].get<int>();
        nd.gain = j["gain"].get<double>();
        nodes.push_back(nd);
    }
    return nodes;
}

} // namespace model_io

inline nlohmann::json model_to_json(const FittedModel& m) {
    nlohmann::json params;
    switch (m.kind) {
        case ModelKind::tree: {
            params["nodes"] = model_io::nodes_to_json(m.as_tree().nodes);
            break;
        }
        case ModelKind::figs: {
            nlohmann::json trees = nlohmann::json::array();
            for (const auto& t : m.as_figs().trees) trees.push_back(model_io::nodes_to_json(t));
            params["trees"] = trees;
            break;
        }
        case ModelKind::ebm: {
            const auto& e = m.as_ebm();
            params["intercept"] = e.intercept;
            params["main_cuts"] = e.main_cuts;
            params["main_tables"] = e.main_tables;
            params["main_counts"] = e.main_counts;
            params["pair_cuts"] = e.pair_cuts;
            nlohmann::json pairs = nlohmann::json::array();
            for (const auto& p : e.pairs) pairs.push_back({{"f1", p.f1}, {"f2", p.f2}, {"table", p.table}});
            params["pairs"] = pairs;
            params["pair_counts"] = e.pair_counts;
            params["warnings"] = e.warnings;
            break;
        }
        case ModelKind::relu_dnn: {
            const auto& net = m.as_relu();
            nlohmann::json ws = nlohmann::json::array();
            for (const auto& w : net.W) ws.push_back({{"rows", w.rows}, {"cols", w.cols}, {"data", w.v}});
            params["weights"] = ws;
            params["biases"] = net.b;
            params["input_dim"] = net.input_dim;
            break;
        }
    }
    return nlohmann::json{{"format", "rulxai-model"},
                          {"version", 1},
                          {"kind", kind_name(m.kind)},
                          {"feature_names", m.manifest.feature_names},
                          {"seed", m.manifest.seed},
                          {"spec", m.manifest.spec},
                          {"parameters", params}};
}

inline FittedModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "rulxai-model") throw std::invalid_argument("not a rulxai model document");
    if (j.value("version", 0) != 1) throw std::invalid_argument("unsupported model document version");
    FittedModel m;
    m.kind = kind_from_name(j["kind"].get<std::string>());
    m.manifest.kind = m.kind;
    m.manifest.spec = j["spec"];
    m.manifest.seed = j["seed"].get<std::uint64_t>();
    m.manifest.feature_names = j["feature_names"].get<std::vector<std::string>>();
    const auto& params = j["parameters"];
    switch (m.kind) {
        case ModelKind::tree: {
            DecisionTree t;
            t.spec = tree_spec_from_json(m.manifest.spec);
            t.nodes = model_io::nodes_from_json(params["nodes"]);
            m.impl = std::move(t);
            break;
        }
        case ModelKind::figs: {
            FigsModel f;
            f.spec = figs_spec_from_json(m.manifest.spec);
            for (const auto& t : params["trees"]) f.trees.push_back(model_io::nodes_from_json(t));
            m.impl = std::move(f);
            break;
        }
        case ModelKind::ebm: {
            EbmModel e;
            e.spec = ebm_spec_from_json(m.manifest.spec);
            e.intercept = params["intercept"].get<double>();
            e.main_cuts = params["main_cuts"].get<std::vector<std::vector<double>>>();
            e.main_tables = params["main_tables"].get<std::vector<std::vector<double>>>();
            e.main_counts = params["main_counts"].get<std::vector<std::vector<int>>>();
            e.pair_cuts = params["pair_cuts"].get<std::vector<std::vector<double>>>();
            for (const auto& p : params["pairs"]) {
                EbmPairTerm term;
                term.f1 = p["f1"].get<int>();
                term.f2 = p["f2"].get<int>();
                term.table = p["table"].get<std::vector<double>>();
                e.pairs.push_back(std::move(term));
            }
            e.pair_counts = params["pair_counts"].get<std::vector<std::vector<int>>>();
            e.warnings = params["warnings"].get<std::vector<std::string>>();
            m.impl = std::move(e);
            break;
        }
        case ModelKind::relu_dnn: {
            ReluDnn net;
            net.spec = relu_spec_from_json(m.manifest.spec);
            net.input_dim = params["input_dim"].get<std::size_t>();
            for (const auto& w : params["weights"]) {
                Matrix mat;
                mat.rows = w["rows"].get<std::size_t>();
                mat.cols = w["cols"].get<std::size_t>();
                mat.v = w["data"].get<std::vector<double>>();
                net.W.push_back(std::move(mat));
            }
            net.b = params["biases"].get<std::vector<std::vector<double>>>();
            m.impl = std::move(net);
            break;
        }
    }
    return m;
}

} // namespace rulxai
