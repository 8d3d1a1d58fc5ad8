#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulxai/common.hpp"
#include "rulxai/dataset.hpp"
#include "rulxai/explain.hpp"
#include "rulxai/model.hpp"

namespace rulxai {

// The exact affine function a ReLU network computes inside one activation
// region, together with the region's training support.
struct LocalLinearModel {
    std::vector<std::uint8_t> pattern; // all hidden units, layer order
    std::vector<double> coefficients;  // length d
    double intercept = 0.0;
    int support_count = 0;
    double local_r2 = 0.0;
};

namespace interpret_detail {

// Composes the masked affine map for a fixed activation pattern:
// beta = W_out D_L W_L ... D_1 W_1, intercept accumulates the biases.
inline std::pair<std::vector<double>, double> masked_affine(const ReluDnn& net,
                                                            const std::vector<std::uint8_t>& pattern) {
    const std::size_t d = net.input_dim;
    // E: units x d effective weights, e: units effective bias
    Matrix E(net.W[0].rows, d);
    std::vector<double> e(net.W[0].rows);
    std::size_t bit = 0;
    for (std::size_t u = 0; u < net.W[0].rows; ++u, ++bit) {
        const double m = pattern[bit] ? 1.0 : 0.0;
        for (std::size_t j = 0; j < d; ++j) E.at(u, j) = m * net.W[0].at(u, j);
        e[u] = m * net.b[0][u];
    }
    for (std::size_t l = 1; l + 1 <= net.W.size() - 1; ++l) {
        Matrix E2(net.W[l].rows, d);
        std::vector<double> e2(net.W[l].rows);
        for (std::size_t u = 0; u < net.W[l].rows; ++u, ++bit) {
            const double m = pattern[bit] ? 1.0 : 0.0;
            double acc_b = net.b[l][u];
            for (std::size_t j = 0; j < d; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < net.W[l].cols; ++k) s += net.W[l].at(u, k) * E.at(k, j);
                E2.at(u, j) = m * s;
            }
            for (std::size_t k = 0; k < net.W[l].cols; ++k) acc_b += net.W[l].at(u, k) * e[k];
            e2[u] = m * acc_b;
        }
        E = std::move(E2);
        e = std::move(e2);
    }
    const auto& Wout = net.W.back();
    std::vector<double> beta(d, 0.0);
    double intercept = net.b.back()[0];
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < Wout.cols; ++k) beta[j] += Wout.at(0, k) * E.at(k, j);
    for (std::size_t k = 0; k < Wout.cols; ++k) intercept += Wout.at(0, k) * e[k];
    return {beta, intercept};
}

} // namespace interpret_detail

// Groups training rows by hidden-unit on/off pattern and unwraps the exact
// local linear model of each region. Supports partition n_train.
inline std::vector<LocalLinearModel> extract_llms(const FittedModel& model, const TabularDataset& ds) {
    const ReluDnn& net = model.as_relu();
    const auto tr = ds.train_indices();
    const Matrix Xt = ds.X.gather_rows(tr);
    const auto yt = ds.y_at(tr);

    std::map<std::vector<std::uint8_t>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < Xt.rows; ++i) groups[net.activation_pattern(Xt.row(i))].push_back(i);

    std::vector<LocalLinearModel> llms;
    for (const auto& [pattern, rows] : groups) {
        LocalLinearModel llm;
        llm.pattern = pattern;
        auto [beta, intercept] = interpret_detail::masked_affine(net, pattern);
        llm.coefficients = std::move(beta);
        llm.intercept = intercept;
        llm.support_count = static_cast<int>(rows.size());
        double sse = 0.0, sst = 0.0;
        const double ym = [&] {
            double s = 0.0;
            for (std::size_t i : rows) s += yt[i];
            return s / static_cast<double>(rows.size());
        }();
        for (std::size_t i : rows) {
            const double p = net.predict_row(Xt.row(i));
            sse += (yt[i] - p) * (yt[i] - p);
            sst += (yt[i] - ym) * (yt[i] - ym);
        }
        llm.local_r2 = sst > 0.0 ? 1.0 - sse / sst : (sse <= 1e-18 ? 1.0 : 0.0);
        llms.push_back(std::move(llm));
    }
    std::stable_sort(llms.begin(), llms.end(),
                     [](const LocalLinearModel& a, const LocalLinearModel& b) { return a.support_count > b.support_count; });
    return llms;
}

// importance_j = sum_r (support_r / n_train) * |beta_rj| * sigma_j,
// normalized to sum 1.
inline FeatureScoreTable llm_feature_importance(const std::vector<LocalLinearModel>& llms,
                                                const TabularDataset& ds) {
    if (llms.empty()) throw std::invalid_argument("llm_feature_importance: empty LLM list");
    const auto tr = ds.train_indices();
    const Matrix Xt = ds.X.gather_rows(tr);
    FeatureScoreTable t;
    t.feature_names = ds.feature_names;
    t.method = "llm_importance";
    t.metadata = {{"formula", "support-weighted |coefficient| * feature std"}};
    t.scores.assign(ds.d(), 0.0);
    int n_total = 0;
    for (const auto& llm : llms) n_total += llm.support_count;
    for (std::size_t j = 0; j < ds.d(); ++j) {
        const auto col = Xt.column(j);
        const double sigma = is_constant(col) ? 0.0 : stddev(col);
        double s = 0.0;
        for (const auto& llm : llms)
            s += static_cast<double>(llm.support_count) / n_total * std::abs(llm.coefficients[j]) * sigma;
        t.scores[j] = s;
    }
    double total = 0.0;
    for (double s : t.scores) total += s;
    if (total > 0.0)
        for (auto& s : t.scores) s /= total;
    return t;
}

struct LlmCoefficientViews {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> polylines; // one per LLM
    std::vector<int> support;
    struct Summary {
        double min, q1, median, q3, max, weighted_mean;
    };
    std::vector<Summary> per_feature; // support-weighted
};

inline LlmCoefficientViews llm_coefficient_views(const std::vector<LocalLinearModel>& llms,
                                                 const std::vector<std::string>& feature_names) {
    if (llms.empty()) throw std::invalid_argument("llm_coefficient_views: empty LLM list");
    LlmCoefficientViews v;
    v.feature_names = feature_names;
    for (const auto& llm : llms) {
        v.polylines.push_back(llm.coefficients);
        v.support.push_back(llm.support_count);
    }
    double wtotal = 0.0;
    for (int s : v.support) wtotal += s;
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
        std::vector<std::pair<double, double>> vw; // (coefficient, weight)
        double wmean = 0.0;
        for (const auto& llm : llms) {
            vw.push_back({llm.coefficients[j], static_cast<double>(llm.support_count)});
            wmean += llm.support_count * llm.coefficients[j];
        }
        wmean /= wtotal;
        std::sort(vw.begin(), vw.end());
        auto wq = [&](double q) { // smallest value with cumulative weight >= q * total
            double cum = 0.0;
            for (const auto& [val, w] : vw) {
                cum += w;
                if (cum >= q * wtotal) return val;
            }
            return vw.back().first;
        };
        v.per_feature.push_back({vw.front().first, wq(0.25), wq(0.5), wq(0.75), vw.back().first, wmean});
    }
    return v;
}

struct EbmTermView {
    std::string term;
    std::vector<int> features;       // 1 or 2 indices
    std::vector<double> bin_edges;   // first axis cuts
    std::vector<double> bin_edges2;  // second axis cuts (pairs)
    std::vector<double> contributions;
    double importance = 0.0; // mean |contribution| weighted by training bin counts
};

inline std::vector<EbmTermView> ebm_terms(const FittedModel& model, const TabularDataset& ds) {
    const EbmModel& e = model.as_ebm();
    std::vector<EbmTermView> views;
    int n_train = 0;
    if (!e.main_counts.empty())
        for (int c : e.main_counts[0]) n_train += c;

    for (std::size_t f = 0; f < e.main_tables.size(); ++f) {
        EbmTermView v;
        v.term = ds.feature_names[f];
        v.features = {static_cast<int>(f)};
        v.bin_edges = e.main_cuts[f];
        v.contributions = e.main_tables[f];
        double s = 0.0;
        for (std::size_t k = 0; k < v.contributions.size(); ++k) s += e.main_counts[f][k] * std::abs(v.contributions[k]);
        v.importance = n_train > 0 ? s / n_train : 0.0;
        views.push_back(std::move(v));
    }
    for (std::size_t q = 0; q < e.pairs.size(); ++q) {
        const auto& p = e.pairs[q];
        EbmTermView v;
        v.term = ds.feature_names[p.f1] + " x " + ds.feature_names[p.f2];
        v.features = {p.f1, p.f2};
        v.bin_edges = e.pair_cuts[p.f1];
        v.bin_edges2 = e.pair_cuts[p.f2];
        v.contributions = p.table;
        double s = 0.0;
        for (std::size_t k = 0; k < v.contributions.size(); ++k) s += e.pair_counts[q][k] * std::abs(v.contributions[k]);
        v.importance = n_train > 0 ? s / n_train : 0.0;
        views.push_back(std::move(v));
    }
    std::stable_sort(views.begin(), views.end(),
                     [](const EbmTermView& a, const EbmTermView& b) { return a.importance > b.importance; });
    return views;
}

// Path predicates -> leaf value; rules per tree are mutually exclusive and
// exhaustive over the feature space.
struct Rule {
    struct Predicate {
        int feature;
        bool is_leq; // x[feature] <= threshold, else >
        double threshold;
    };
    std::vector<Predicate> predicates;
    double value = 0.0;
    int n_samples = 0;
};

struct TreeStructure {
    struct TreeSummary {
        int index;
        int n_leaves;
        int depth;
        int n_samples;
    };
    std::vector<std::vector<Rule>> rules_per_tree;
    std::vector<TreeSummary> summaries;
};

namespace interpret_detail {

inline void collect_rules(const std::vector<TreeNode>& nodes, int node, std::vector<Rule::Predicate>& path,
                          std::vector<Rule>& out, int depth, int& max_depth) {
    max_depth = std::max(max_depth, depth);
    if (nodes[node].is_leaf()) {
        out.push_back({path, nodes[node].value, nodes[node].n_samples});
        return;
    }
    path.push_back({nodes[node].feature, true, nodes[node].threshold});
    collect_rules(nodes, nodes[node].left, path, out, depth + 1, max_depth);
    path.back().is_leq = false;
    collect_rules(nodes, nodes[node].right, path, out, depth + 1, max_depth);
    path.pop_back();
}

} // namespace interpret_detail

inline TreeStructure tree_structure(const FittedModel& model) {
    std::vector<const std::vector<TreeNode>*> trees;
    if (model.kind == ModelKind::tree) {
        trees.push_back(&model.as_tree().nodes);
    } else if (model.kind == ModelKind::figs) {
        for (const auto& t : model.as_figs().trees) trees.push_back(&t);
    } else {
        throw std::invalid_argument("tree_structure: model must be a tree or figs model");
    }
    TreeStructure s;
    for (std::size_t k = 0; k < trees.size(); ++k) {
        std::vector<Rule> rules;
        std::vector<Rule::Predicate> path;
        int max_depth = 0;
        interpret_detail::collect_rules(*trees[k], 0, path, rules, 0, max_depth);
        s.summaries.push_back({static_cast<int>(k), static_cast<int>(rules.size()), max_depth,
                               (*trees[k])[0].n_samples});
        s.rules_per_tree.push_back(std::move(rules));
    }
    return s;
}

namespace interpret_detail {

// Saabas-style path attribution: each split's change in node mean is
// credited to the split feature. Telescopes exactly to the leaf value.
inline void path_contributions(const std::vector<TreeNode>& nodes, const double* x,
                               std::vector<double>& contrib, double& base) {
    base += nodes[0].value;
    int cur = 0;
    while (!nodes[cur].is_leaf()) {
        const int next = (x[nodes[cur].feature] <= nodes[cur].threshold) ? nodes[cur].left : nodes[cur].right;
        contrib[static_cast<std::size_t>(nodes[cur].feature)] += nodes[next].value - nodes[cur].value;
        cur = next;
    }
}

} // namespace interpret_detail

// Kind-specific exact local decomposition; base_value plus the per-feature
// (and for EBM, per-pair) entries reproduce the model prediction.
inline Attribution local_contribution(const FittedModel& model, const TabularDataset& ds, std::size_t sample_index) {
    if (sample_index >= ds.n()) throw std::invalid_argument("local_contribution: sample index out of range");
    const double* x = ds.X.row(sample_index);
    Attribution att;
    att.method = "intrinsic_" + kind_name(model.kind);
    att.sample_index = static_cast<long long>(sample_index);

    switch (model.kind) {
        case ModelKind::relu_dnn: {
            const ReluDnn& net = model.as_relu();
            const auto pattern = net.activation_pattern(x);
            auto [beta, intercept] = interpret_detail::masked_affine(net, pattern);
            att.base_value = intercept;
            for (std::size_t j = 0; j < ds.d(); ++j)
                att.per_feature.push_back({ds.feature_names[j], beta[j] * x[j]});
            att.metadata = {{"decomposition", "weight*value within the sample's activation region"}};
            break;
        }
        case ModelKind::ebm: {
            const EbmModel& e = model.as_ebm();
            att.base_value = e.intercept;
            for (std::size_t f = 0; f < e.main_tables.size(); ++f)
                att.per_feature.push_back({ds.feature_names[f], e.main_tables[f][bin_of(e.main_cuts[f], x[f])]});
            for (const auto& p : e.pairs) {
                const std::size_t i1 = bin_of(e.pair_cuts[p.f1], x[p.f1]);
                const std::size_t i2 = bin_of(e.pair_cuts[p.f2], x[p.f2]);
                att.per_feature.push_back({ds.feature_names[p.f1] + " x " + ds.feature_names[p.f2],
                                           p.table[i1 * e.pair_bins(p.f2) + i2]});
            }
            att.metadata = {{"decomposition", "term table lookups"}};
            break;
        }
        case ModelKind::tree: {
            std::vector<double> contrib(ds.d(), 0.0);
            double base = 0.0;
            interpret_detail::path_contributions(model.as_tree().nodes, x, contrib, base);
            att.base_value = base;
            for (std::size_t j = 0; j < ds.d(); ++j) att.per_feature.push_back({ds.feature_names[j], contrib[j]});
            att.metadata = {{"decomposition", "decision-path mean shifts"}};
            break;
        }
        case ModelKind::figs: {
            std::vector<double> contrib(ds.d(), 0.0);
            double base = 0.0;
            for (const auto& t : model.as_figs().trees)
                interpret_detail::path_contributions(t, x, contrib, base);
            att.base_value = base;
            for (std::size_t j = 0; j < ds.d(); ++j) att.per_feature.push_back({ds.feature_names[j], contrib[j]});
            att.metadata = {{"decomposition", "decision-path mean shifts summed over trees"}};
            break;
        }
    }
    return att;
}

// ---- serialization ----

inline nlohmann::json llms_json(const std::vector<LocalLinearModel>& llms,
                                const std::vector<std::string>& feature_names) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t r = 0; r < llms.size(); ++r) {
        std::string pat;
        for (auto b : llms[r].pattern) pat += b ? '1' : '0';
        arr.push_back({{"pattern", pat},
                       {"coefficients", llms[r].coefficients},
                       {"intercept", llms[r].intercept},
                       {"support_count", llms[r].support_count},
                       {"local_r2", llms[r].local_r2}});
    }
    return nlohmann::json{{"feature_names", feature_names}, {"llms", arr}};
}

inline nlohmann::json term_views_json(const std::vector<EbmTermView>& views) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : views) {
        nlohmann::json j{{"term", v.term},
                         {"features", v.features},
                         {"bin_edges", v.bin_edges},
                         {"contributions", v.contributions},
                         {"importance", v.importance}};
        if (!v.bin_edges2.empty()) j["bin_edges2"] = v.bin_edges2;
        arr.push_back(j);
    }
    return arr;
}

inline nlohmann::json rules_json(const TreeStructure& s, const std::vector<std::string>& feature_names) {
    nlohmann::json trees = nlohmann::json::array();
    for (std::size_t k = 0; k < s.rules_per_tree.size(); ++k) {
        nlohmann::json rules = nlohmann::json::array();
        for (const auto& r : s.rules_per_tree[k]) {
            nlohmann::json preds = nlohmann::json::array();
            for (const auto& p : r.predicates)
                preds.push_back({{"feature", feature_names[static_cast<std::size_t>(p.feature)]},
                                 {"op", p.is_leq ? "<=" : ">"},
                                 {"threshold", p.threshold}});
            rules.push_back({{"predicates", preds}, {"value", r.value}, {"n_samples", r.n_samples}});
        }
        trees.push_back({{"tree", s.summaries[k].index},
                         {"n_leaves", s.summaries[k].n_leaves},
                         {"depth", s.summaries[k].depth},
                         {"rules", rules}});
    }
    return trees;
}

inline std::string parallel_coords_csv(const LlmCoefficientViews& v) {
    std::string out = "llm,support";
    for (const auto& n : v.feature_names) out += "," + n;
    out += "\n";
    char buf[64];
    for (std::size_t r = 0; r < v.polylines.size(); ++r) {
        out += std::to_string(r) + "," + std::to_string(v.support[r]);
        for (double c : v.polylines[r]) {
            std::snprintf(buf, sizeof(buf), "%.17g", c);
            out += std::string(",") + buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace rulxai
