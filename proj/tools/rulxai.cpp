// rulxai: command-line pipeline for interpretable RUL prognostics.
//
//   rulxai <ingest|select|train|explain|interpret|diagnose|report>
//          [--config FILE] [flags]
//
// Exit codes: 0 success, 2 input error, 3 computation failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rulxai/rulxai.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rulxai;

namespace {

constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
    std::string data;
    std::string format = "whitespace";
    long long unit = 1;
    bool no_unit_filter = false;
    bool no_normalize = false;
    double test_ratio = 0.2;
    std::uint64_t seed = 0;
    std::string out = "out";

    std::string select_method = "all";
    double threshold = 0.01;
    int rcit_kernel_size = 100;
    double rcit_alpha = 0.01;
    int rcit_permutations = 200;
    std::string rcit_init = "none";

    std::string models = "tree,figs,ebm,relu_dnn";

    std::string explain_method = "all";
    std::string explain_model = "all";
    long long sample = 0;
    std::string feature; // default: top selected feature
    int grid_size = 100;
    int ale_bins = 10;
    int lime_samples = 1000;
    double kernel_width = 0.0; // 0 = 0.75*sqrt(d)
    int top_k = 10;
    int shap_background = 100;
    int pfi_repeats = 10;

    std::string view = "all";
    std::string diag_test = "all";
    double alpha = 0.1;
    double calib_fraction = 0.5;
    int overfit_bins = 10;
    double flag_factor = 1.5;
    int robustness_repeats = 10;

    // per-model hyperparameter overrides from the config file; empty means
    // the published defaults
    json tree_spec = json::object();
    json figs_spec = json::object();
    json ebm_spec = json::object();
    json relu_spec = json::object();
};

void load_config_file(PipelineConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j = json::parse(in);
    auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j[key].get<std::decay_t<decltype(slot)>>();
    };
    get("data", cfg.data);
    get("format", cfg.format);
    get("unit", cfg.unit);
    get("no_unit_filter", cfg.no_unit_filter);
    get("no_normalize", cfg.no_normalize);
    get("test_ratio", cfg.test_ratio);
    get("seed", cfg.seed);
    get("out", cfg.out);
    get("select_method", cfg.select_method);
    get("threshold", cfg.threshold);
    get("rcit_kernel_size", cfg.rcit_kernel_size);
    get("rcit_alpha", cfg.rcit_alpha);
    get("rcit_permutations", cfg.rcit_permutations);
    get("rcit_init", cfg.rcit_init);
    get("models", cfg.models);
    get("explain_method", cfg.explain_method);
    get("explain_model", cfg.explain_model);
    get("sample", cfg.sample);
    get("feature", cfg.feature);
    get("grid_size", cfg.grid_size);
    get("ale_bins", cfg.ale_bins);
    get("lime_samples", cfg.lime_samples);
    get("kernel_width", cfg.kernel_width);
    get("top_k", cfg.top_k);
    get("shap_background", cfg.shap_background);
    get("pfi_repeats", cfg.pfi_repeats);
    get("view", cfg.view);
    get("diag_test", cfg.diag_test);
    get("alpha", cfg.alpha);
    get("calib_fraction", cfg.calib_fraction);
    get("overfit_bins", cfg.overfit_bins);
    get("flag_factor", cfg.flag_factor);
    get("robustness_repeats", cfg.robustness_repeats);
    if (j.contains("tree_spec")) cfg.tree_spec = j["tree_spec"];
    if (j.contains("figs_spec")) cfg.figs_spec = j["figs_spec"];
    if (j.contains("ebm_spec")) cfg.ebm_spec = j["ebm_spec"];
    if (j.contains("relu_spec")) cfg.relu_spec = j["relu_spec"];
}

json config_echo(const PipelineConfig& c) {
    return json{{"data", c.data},
                {"format", c.format},
                {"unit", c.unit},
                {"no_unit_filter", c.no_unit_filter},
                {"no_normalize", c.no_normalize},
                {"test_ratio", c.test_ratio},
                {"seed", c.seed},
                {"out", c.out},
                {"select_method", c.select_method},
                {"threshold", c.threshold},
                {"models", c.models}};
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : csv) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Stage context: output tracking plus the run manifest.
struct Stage {
    fs::path dir;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    explicit Stage(const PipelineConfig& cfg, const std::string& name) : dir(fs::path(cfg.out) / name) {
        fs::create_directories(dir);
    }
    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        out << content;
        outputs.push_back(name);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
    void finish(const PipelineConfig& cfg, const std::string& stage_name, const TabularDataset* ds) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json manifest{{"stage", stage_name},
                      {"version", kVersion},
                      {"config", config_echo(cfg)},
                      {"wall_time_s", secs},
                      {"outputs", outputs}};
        if (ds)
            manifest["dataset_fingerprint"] = {{"rows", ds->n()}, {"column_hash", dataset_fingerprint(*ds)}};
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        out << manifest.dump(2) << "\n";
    }
};

TabularDataset pipeline_dataset(const PipelineConfig& cfg) {
    if (cfg.data.empty()) throw std::invalid_argument("no input data file given (use --data)");
    const RecordFormat fmt = cfg.format == "csv" ? RecordFormat::csv : RecordFormat::whitespace;
    const auto table = load_records(cfg.data, fmt);
    std::optional<long long> unit;
    if (!cfg.no_unit_filter) unit = cfg.unit;
    return build_dataset(table, unit, !cfg.no_normalize, SplitSpec{cfg.test_ratio, cfg.seed});
}

std::vector<std::string> read_selected_features(const PipelineConfig& cfg) {
    const fs::path p = fs::path(cfg.out) / "select" / "selected_features.txt";
    std::ifstream in(p);
    if (!in) throw std::invalid_argument("selected features not found (" + p.string() + "); run `rulxai select` first");
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) names.push_back(line);
    if (names.empty()) throw std::invalid_argument("selected feature list is empty: " + p.string());
    return names;
}

std::map<std::string, FittedModel> load_models(const PipelineConfig& cfg, const std::string& which) {
    std::map<std::string, FittedModel> models;
    const auto wanted = split_list(which == "all" ? std::string("tree,figs,ebm,relu_dnn") : which);
    for (const auto& name : wanted) {
        const fs::path p = fs::path(cfg.out) / "train" / ("model_" + name + ".json");
        std::ifstream in(p);
        if (!in) {
            if (which != "all")
                throw std::invalid_argument("model file not found: " + p.string() + "; run `rulxai train` first");
            continue;
        }
        models.emplace(name, model_from_json(json::parse(in)));
    }
    if (models.empty())
        throw std::invalid_argument("no trained models under " + (fs::path(cfg.out) / "train").string() +
                                    "; run `rulxai train` first");
    return models;
}

// ---- subcommands ----

int cmd_ingest(const PipelineConfig& cfg) {
    Stage stage(cfg, "ingest");
    const auto ds = pipeline_dataset(cfg);
    stage.write_json("dataset_snapshot.json", dataset_snapshot(ds));
    stage.finish(cfg, "ingest", &ds);
    std::cout << "rows=" << ds.n() << " features=" << ds.d() << " train=" << ds.train_indices().size()
              << " test=" << ds.test_indices().size() << "\n";
    return 0;
}

int cmd_select(const PipelineConfig& cfg) {
    Stage stage(cfg, "select");
    const auto ds = pipeline_dataset(cfg);

    const bool all = cfg.select_method == "all";
    std::map<std::string, FeatureScoreTable> tables;
    if (all || cfg.select_method == "pearson") tables["pearson"] = pearson_scores(ds);
    if (all || cfg.select_method == "dcor") tables["distance_corr"] = distance_correlation(ds);
    if (all || cfg.select_method == "gbdt") tables["gbdt_importance"] = gbdt_importance(ds, 100, 3, 0.1, cfg.seed);
    if (all || cfg.select_method == "rcit") {
        RcitConfig rc;
        rc.num_fourier_features = cfg.rcit_kernel_size;
        rc.alpha = cfg.rcit_alpha;
        rc.num_permutations = cfg.rcit_permutations;
        rc.seed = cfg.seed;
        rc.initialization = cfg.rcit_init;
        tables["rcit_dependence"] = rcit_dependence(ds, rc);
    }
    if (tables.empty()) throw std::invalid_argument("unknown selection method: " + cfg.select_method);

    for (const auto& [name, t] : tables) {
        stage.write(name + ".csv", score_table_csv(t));
        stage.write_json(name + ".json", score_table_json(t));
        stage.write(name + ".svg", svg::bar_chart("Feature scores (" + name + ")", t.feature_names, t.scores));
    }

    const auto eda = eda_summary(ds);
    stage.write_json("heatmap.json", heatmap_json(eda));

    const std::string basis = all ? "pearson" : tables.begin()->first;
    const auto selected = select_features(tables.at(basis), cfg.threshold);
    std::string listing;
    for (const auto& name : selected) listing += name + "\n";
    stage.write("selected_features.txt", listing);
    if (selected.empty())
        std::cerr << "warning: no feature exceeds threshold " << cfg.threshold << "; selection is empty\n";

    stage.finish(cfg, "select", &ds);
    std::cout << "selected " << selected.size() << " features (threshold " << cfg.threshold << ", basis " << basis
              << ")\n";
    return 0;
}

int cmd_train(const PipelineConfig& cfg) {
    Stage stage(cfg, "train");
    const auto full = pipeline_dataset(cfg);
    const auto ds = select_columns(full, read_selected_features(cfg));

    struct Row {
        std::string name;
        AccuracyReport rep;
        double seconds;
    };
    std::vector<Row> rows;
    std::vector<std::string> failures;

    for (const auto& name : split_list(cfg.models)) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            FittedModel model;
            if (name == "tree") {
                model = fit_model_tree(ds, tree_spec_from_json(cfg.tree_spec));
            } else if (name == "figs") {
                model = fit_model_figs(ds, figs_spec_from_json(cfg.figs_spec));
            } else if (name == "ebm") {
                EbmSpec spec = ebm_spec_from_json(cfg.ebm_spec);
                if (!cfg.ebm_spec.contains("seed")) spec.seed = cfg.seed;
                model = fit_model_ebm(ds, spec);
                for (const auto& w : model.as_ebm().warnings) std::cerr << "warning: ebm: " << w << "\n";
            } else if (name == "relu_dnn") {
                ReluDnnSpec spec = relu_spec_from_json(cfg.relu_spec);
                if (!cfg.relu_spec.contains("seed")) spec.seed = cfg.seed;
                model = fit_model_relu(ds, spec);
            } else {
                throw std::invalid_argument("unknown model kind: " + name);
            }
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            stage.write("model_" + name + ".json", model_to_json(model).dump(2) + "\n");
            rows.push_back({name, accuracy_report(model, ds), secs});
        } catch (const std::exception& e) {
            std::cerr << "error: training " << name << " failed: " << e.what() << "\n";
            failures.push_back(name);
        }
    }

    std::string csv = "model,test_mse,test_mae,test_r2,train_mse,train_mae,train_r2,time_s\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.2f\n", r.name.c_str(), r.rep.test.mse,
                      r.rep.test.mae, r.rep.test.r2, r.rep.train.mse, r.rep.train.mae, r.rep.train.r2, r.seconds);
        csv += buf;
    }
    stage.write("metrics.csv", csv);
    stage.finish(cfg, "train", &ds);
    for (const auto& r : rows)
        std::cout << r.name << ": test R2 " << r.rep.test.r2 << ", test MSE " << r.rep.test.mse << "\n";
    return rows.empty() ? 3 : 0;
}

int cmd_explain(const PipelineConfig& cfg) {
    Stage stage(cfg, "explain");
    const auto full = pipeline_dataset(cfg);
    const auto models = load_models(cfg, cfg.explain_model);
    const auto ds = select_columns(full, models.begin()->second.manifest.feature_names);

    const bool all = cfg.explain_method == "all";
    const std::string feature = cfg.feature.empty() ? ds.feature_names[0] : cfg.feature;
    const std::size_t sample = static_cast<std::size_t>(cfg.sample);

    for (const auto& [name, model] : models) {
        if (all || cfg.explain_method == "pfi") {
            const auto t = permutation_importance(model, ds, cfg.pfi_repeats, cfg.seed);
            stage.write("pfi_" + name + ".csv", score_table_csv(t));
            stage.write("pfi_" + name + ".svg",
                        svg::bar_chart("Permutation importance (" + name + ")", t.feature_names, t.scores));
        }
        if (all || cfg.explain_method == "pdp" || cfg.explain_method == "ale") {
            const auto pdp = partial_dependence(model, ds, feature, cfg.grid_size);
            const auto ale = accumulated_local_effects(model, ds, feature, cfg.ale_bins);
            stage.write_json("pdp_" + name + "_" + feature + ".json", curve_json(pdp));
            stage.write_json("ale_" + name + "_" + feature + ".json", curve_json(ale));
            stage.write("pdp_ale_" + name + "_" + feature + ".svg",
                        svg::line_chart("PDP and ALE of " + feature + " (" + name + ")",
                                        {{"pdp", pdp.grid, pdp.values}, {"ale", ale.grid, ale.values}}, feature,
                                        "effect"));
        }
        if (all || cfg.explain_method == "lime") {
            const auto att =
                lime_explain(model, ds, sample, cfg.lime_samples, cfg.kernel_width, cfg.top_k, cfg.seed);
            stage.write_json("lime_" + name + "_s" + std::to_string(sample) + ".json", attribution_json(att));
            std::vector<std::string> labels;
            std::vector<double> values;
            for (const auto& [f, v] : att.per_feature) {
                labels.push_back(f);
                values.push_back(v);
            }
            stage.write("lime_" + name + "_s" + std::to_string(sample) + ".svg",
                        svg::bar_chart("LIME sample " + std::to_string(sample) + " (" + name + ")", labels, values));
        }
        if (all || cfg.explain_method == "shap") {
            const auto bg = shapley_background(ds, static_cast<std::size_t>(cfg.shap_background), cfg.seed);
            const auto att = shapley_exact(model, ds, sample, bg);
            stage.write_json("shap_" + name + "_s" + std::to_string(sample) + ".json", attribution_json(att));
            std::vector<std::string> labels;
            std::vector<double> values;
            for (const auto& [f, v] : att.per_feature) {
                labels.push_back(f);
                values.push_back(v);
            }
            stage.write("shap_" + name + "_s" + std::to_string(sample) + ".svg",
                        svg::bar_chart("Shapley sample " + std::to_string(sample) + " (" + name + ")", labels,
                                       values));
        }
    }
    stage.finish(cfg, "explain", &ds);
    std::cout << "explained " << models.size() << " model(s), method=" << cfg.explain_method << "\n";
    return 0;
}

int cmd_interpret(const PipelineConfig& cfg) {
    Stage stage(cfg, "interpret");
    const auto full = pipeline_dataset(cfg);
    const auto models = load_models(cfg, cfg.explain_model);
    const auto ds = select_columns(full, models.begin()->second.manifest.feature_names);
    const bool all = cfg.view == "all";
    const std::size_t sample = static_cast<std::size_t>(cfg.sample);

    for (const auto& [name, model] : models) {
        if (model.kind == ModelKind::relu_dnn && (all || cfg.view == "llm" || cfg.view == "parallel")) {
            const auto llms = extract_llms(model, ds);
            if (all || cfg.view == "llm") {
                stage.write_json("llms_" + name + ".json", llms_json(llms, ds.feature_names));
                const auto imp = llm_feature_importance(llms, ds);
                stage.write("llm_importance.csv", score_table_csv(imp));
                stage.write("llm_importance.svg",
                            svg::bar_chart("LLM feature importance", imp.feature_names, imp.scores));
            }
            if (all || cfg.view == "parallel") {
                const auto v = llm_coefficient_views(llms, ds.feature_names);
                stage.write("parallel_coords_" + name + ".csv", parallel_coords_csv(v));
                stage.write("parallel_coords_" + name + ".svg",
                            svg::parallel_coordinates("LLM coefficients (" + name + ")", v.feature_names,
                                                      v.polylines));
            }
        }
        if (model.kind == ModelKind::ebm && (all || cfg.view == "terms")) {
            const auto views = ebm_terms(model, ds);
            stage.write_json("ebm_terms.json", term_views_json(views));
            std::vector<std::string> labels;
            std::vector<double> values;
            for (const auto& v : views) {
                labels.push_back(v.term);
                values.push_back(v.importance);
            }
            stage.write("ebm_terms.svg", svg::bar_chart("EBM term importance", labels, values));
        }
        if ((model.kind == ModelKind::tree || model.kind == ModelKind::figs) && (all || cfg.view == "rules")) {
            stage.write_json("rules_" + name + ".json", rules_json(tree_structure(model), ds.feature_names));
        }
        if (all || cfg.view == "local") {
            const auto att = local_contribution(model, ds, sample);
            stage.write_json("local_" + name + "_s" + std::to_string(sample) + ".json", attribution_json(att));
            std::vector<std::string> labels;
            std::vector<double> values;
            for (const auto& [f, v] : att.per_feature) {
                labels.push_back(f);
                values.push_back(v);
            }
            stage.write("local_" + name + "_s" + std::to_string(sample) + ".svg",
                        svg::bar_chart("Intrinsic contributions sample " + std::to_string(sample) + " (" + name + ")",
                                       labels, values));
        }
    }
    stage.finish(cfg, "interpret", &ds);
    std::cout << "interpreted " << models.size() << " model(s), view=" << cfg.view << "\n";
    return 0;
}

int cmd_diagnose(const PipelineConfig& cfg) {
    Stage stage(cfg, "diagnose");
    const auto full = pipeline_dataset(cfg);
    const auto models = load_models(cfg, cfg.explain_model);
    const auto ds = select_columns(full, models.begin()->second.manifest.feature_names);
    const bool all = cfg.diag_test == "all";

    DiagnosticsReport report;
    report.metadata = {{"alpha", cfg.alpha},
                       {"calib_fraction", cfg.calib_fraction},
                       {"flag_factor", cfg.flag_factor},
                       {"seed", cfg.seed},
                       {"resilience_definition", "largest-|residual| prefix; shift = standardized mean difference"}};

    std::string acc_csv = "model,split,mse,mae,r2\n";
    std::vector<svg::Series> rob_series, res_series;
    std::vector<std::string> acc_labels;
    std::vector<double> acc_values;

    for (const auto& [name, model] : models) {
        ModelDiagnostics md;
        md.model_name = name;
        if (all || cfg.diag_test == "accuracy") {
            md.accuracy = accuracy_report(model, ds);
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s,train,%.6f,%.6f,%.6f\n%s,test,%.6f,%.6f,%.6f\n", name.c_str(),
                          md.accuracy.train.mse, md.accuracy.train.mae, md.accuracy.train.r2, name.c_str(),
                          md.accuracy.test.mse, md.accuracy.test.mae, md.accuracy.test.r2);
            acc_csv += buf;
            acc_labels.push_back(name);
            acc_values.push_back(md.accuracy.test.r2);
        }
        if (all || cfg.diag_test == "residuals") {
            md.residuals = residual_pairs(model, ds);
            stage.write("residuals_" + name + ".csv", residual_csv(md.residuals));
            svg::Series train_s{"train", {}, {}}, test_s{"test", {}, {}};
            for (const auto& [p, r] : md.residuals.train) {
                train_s.x.push_back(p);
                train_s.y.push_back(r);
            }
            for (const auto& [p, r] : md.residuals.test) {
                test_s.x.push_back(p);
                test_s.y.push_back(r);
            }
            stage.write("residuals_" + name + ".svg",
                        svg::scatter("Residuals (" + name + ")", {train_s, test_s}, "prediction", "residual"));
        }
        if (all || cfg.diag_test == "overfit") {
            md.overfit = overfit_slices(model, ds, ds.feature_names[0], cfg.overfit_bins, cfg.flag_factor);
            stage.write_json("overfit_" + name + ".json", overfit_json(md.overfit));
        }
        if (all || cfg.diag_test == "reliability") {
            md.reliability = conformal_reliability(model, ds, cfg.alpha, cfg.calib_fraction, cfg.seed);
            stage.write_json("reliability_" + name + ".json", conformal_json(md.reliability));
            std::vector<std::string> labels;
            std::vector<double> cov;
            for (std::size_t g = 0; g < md.reliability.segmented.size(); ++g) {
                labels.push_back("decile " + std::to_string(g + 1));
                cov.push_back(md.reliability.segmented[g].coverage);
            }
            stage.write("reliability_" + name + ".svg",
                        svg::bar_chart("Segmented coverage (" + name + ", alpha " + std::to_string(cfg.alpha) + ")",
                                       labels, cov));
        }
        if (all || cfg.diag_test == "robustness") {
            md.robustness = robustness_curve(model, ds, {}, cfg.robustness_repeats, cfg.seed);
            stage.write_json("robustness_" + name + ".json", curve_json(md.robustness));
            stage.write("robustness_" + name + ".csv", curve_csv(md.robustness));
            rob_series.push_back({name, md.robustness.grid, md.robustness.values});
        }
        if (all || cfg.diag_test == "resilience") {
            md.resilience = resilience_curve(model, ds);
            stage.write_json("resilience_" + name + ".json", resilience_json(md.resilience));
            stage.write("resilience_" + name + ".csv", curve_csv(md.resilience.curve));
            res_series.push_back({name, md.resilience.curve.grid, md.resilience.curve.values});
        }
        report.models.push_back(std::move(md));
    }

    if (all || cfg.diag_test == "accuracy") {
        stage.write("accuracy.csv", acc_csv);
        stage.write("accuracy.svg", svg::bar_chart("Test R2 by model", acc_labels, acc_values));
    }
    if (!rob_series.empty())
        stage.write("robustness.svg",
                    svg::line_chart("Robustness: test MSE vs noise scale", rob_series, "lambda", "test MSE"));
    if (!res_series.empty())
        stage.write("resilience.svg",
                    svg::line_chart("Resilience: worst-subset MSE", res_series, "ratio", "MSE"));
    stage.write_json("diagnostics_report.json", diagnostics_json(report));
    stage.finish(cfg, "diagnose", &ds);
    std::cout << "diagnostics written for " << models.size() << " model(s)\n";
    return 0;
}

int cmd_report(const PipelineConfig& cfg) {
    const fs::path out(cfg.out);
    std::string md = "# rulxai pipeline report\n\n";

    auto stage_files = [&](const std::string& stage) {
        std::vector<std::string> files;
        const fs::path dir = out / stage;
        if (fs::exists(dir))
            for (const auto& e : fs::directory_iterator(dir))
                if (e.is_regular_file() && e.path().filename() != "manifest.json")
                    files.push_back(e.path().filename().string());
        std::sort(files.begin(), files.end());
        return files;
    };
    auto link_list = [&](const std::string& stage) {
        std::string s;
        for (const auto& f : stage_files(stage)) s += "- [" + f + "](" + stage + "/" + f + ")\n";
        return s;
    };
    auto section = [&](const std::string& title, const std::string& stage, const std::string& extra = "") {
        md += "## " + title + "\n\n";
        const auto files = stage_files(stage);
        if (files.empty()) {
            md += "not run\n\n";
        } else {
            md += extra + link_list(stage) + "\n";
        }
    };

    // inline the metrics table when present; the wall-time column stays in
    // metrics.csv only so the report is byte-stable across reruns
    std::string metrics_extra;
    {
        std::ifstream in(out / "train" / "metrics.csv");
        if (in) {
            metrics_extra = "Model performance:\n\n";
            std::string line;
            bool header = true;
            while (std::getline(in, line)) {
                const auto cut = line.rfind(',');
                if (cut != std::string::npos) line = line.substr(0, cut);
                std::string row = "| ";
                for (char c : line) row += (c == ',') ? std::string(" | ") : std::string(1, c);
                row += " |\n";
                metrics_extra += row;
                if (header) {
                    metrics_extra += "|---|---|---|---|---|---|---|\n";
                    header = false;
                }
            }
            metrics_extra += "\n";
        }
    }
    std::string select_extra;
    {
        std::ifstream in(out / "select" / "selected_features.txt");
        if (in) {
            select_extra = "Selected features: ";
            std::string line;
            bool first = true;
            while (std::getline(in, line))
                if (!line.empty()) {
                    select_extra += (first ? "" : ", ") + line;
                    first = false;
                }
            select_extra += "\n\n";
        }
    }

    section("Data", "ingest");
    section("Feature selection", "select", select_extra);
    section("Models", "train", metrics_extra);
    section("Explanations", "explain");
    section("Interpretability", "interpret");
    section("Diagnostics", "diagnose");

    md += "## Run manifests\n\n";
    for (const char* stage : {"ingest", "select", "train", "explain", "interpret", "diagnose"}) {
        const fs::path m = out / stage / "manifest.json";
        if (fs::exists(m)) md += "- [" + std::string(stage) + "](" + stage + "/manifest.json)\n";
    }
    md += "\n";

    std::ofstream f(out / "report.md", std::ios::binary);
    f << md;
    std::cout << "report written to " << (out / "report.md").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    PipelineConfig cfg;

    // --config FILE provides defaults; explicit flags win
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                load_config_file(cfg, argv[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
        }
    }

    CLI::App app{"Interpretable RUL prognostics pipeline"};
    app.set_version_flag("--version", kVersion);
    app.fallthrough();
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (defaults; flags win)");
    app.add_option("--data", cfg.data, "input data file");
    app.add_option("--format", cfg.format, "whitespace|csv")->check(CLI::IsMember({"whitespace", "csv"}));
    app.add_option("--unit", cfg.unit, "unit id filter (default 1)");
    app.add_flag("--all-units", cfg.no_unit_filter, "keep every unit");
    app.add_flag("--no-normalize", cfg.no_normalize, "skip min-max scaling");
    app.add_option("--test-ratio", cfg.test_ratio, "test split fraction");
    app.add_option("--seed", cfg.seed, "global seed");
    app.add_option("--out", cfg.out, "output directory (default out)");

    auto* ingest = app.add_subcommand("ingest", "load data, derive RUL, split");
    auto* select = app.add_subcommand("select", "feature scores and selection");
    select->add_option("--method", cfg.select_method, "pearson|dcor|gbdt|rcit|all")
        ->check(CLI::IsMember({"pearson", "dcor", "gbdt", "rcit", "all"}));
    select->add_option("--threshold", cfg.threshold, "selection threshold (default 0.01)");
    select->add_option("--rcit-kernel-size", cfg.rcit_kernel_size, "random Fourier features (default 100)");
    select->add_option("--rcit-alpha", cfg.rcit_alpha, "rcit p-value threshold (default 0.01)");
    select->add_option("--rcit-permutations", cfg.rcit_permutations, "permutation count (default 200)");
    select->add_option("--rcit-init", cfg.rcit_init, "none|feature_importance")
        ->check(CLI::IsMember({"none", "feature_importance"}));

    auto* train = app.add_subcommand("train", "fit the four interpretable models");
    train->add_option("--models", cfg.models, "comma list of tree,figs,ebm,relu_dnn");

    auto* explain = app.add_subcommand("explain", "post-hoc explainers");
    explain->add_option("--method", cfg.explain_method, "pfi|pdp|ale|lime|shap|all")
        ->check(CLI::IsMember({"pfi", "pdp", "ale", "lime", "shap", "all"}));
    explain->add_option("--model", cfg.explain_model, "model kind or all");
    explain->add_option("--sample", cfg.sample, "sample index (default 0)");
    explain->add_option("--feature", cfg.feature, "feature for pdp/ale (default: top selected)");
    explain->add_option("--grid-size", cfg.grid_size, "pdp grid points (default 100)");
    explain->add_option("--bins", cfg.ale_bins, "ale quantile bins (default 10)");
    explain->add_option("--num-samples", cfg.lime_samples, "lime perturbations (default 1000)");
    explain->add_option("--kernel-width", cfg.kernel_width, "lime kernel width (default 0.75*sqrt(d))");
    explain->add_option("--top-k", cfg.top_k, "lime coefficients reported (default 10)");
    explain->add_option("--background", cfg.shap_background, "shap background rows (default 100)");
    explain->add_option("--repeats", cfg.pfi_repeats, "pfi repeats (default 10)");

    auto* interpret = app.add_subcommand("interpret", "intrinsic interpretability");
    interpret->add_option("--view", cfg.view, "llm|parallel|terms|rules|local|all")
        ->check(CLI::IsMember({"llm", "parallel", "terms", "rules", "local", "all"}));
    interpret->add_option("--model", cfg.explain_model, "model kind or all");
    interpret->add_option("--sample", cfg.sample, "sample index (default 0)");

    auto* diagnose = app.add_subcommand("diagnose", "trustworthy-AI battery");
    diagnose->add_option("--test", cfg.diag_test, "accuracy|residuals|overfit|reliability|robustness|resilience|all")
        ->check(CLI::IsMember({"accuracy", "residuals", "overfit", "reliability", "robustness", "resilience", "all"}));
    diagnose->add_option("--model", cfg.explain_model, "model kind or all");
    diagnose->add_option("--alpha", cfg.alpha, "conformal miscoverage (default 0.1)");
    diagnose->add_option("--calib-fraction", cfg.calib_fraction, "calibration fraction (default 0.5)");
    diagnose->add_option("--overfit-bins", cfg.overfit_bins, "overfit slices (default 10)");
    diagnose->add_option("--flag-factor", cfg.flag_factor, "overfit flag factor (default 1.5)");
    diagnose->add_option("--repeats", cfg.robustness_repeats, "robustness repeats (default 10)");

    auto* report = app.add_subcommand("report", "assemble markdown report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        app.exit(e);
        return 2;
    }

    if (const char* env_seed = std::getenv("RULXAI_SEED")) {
        try {
            cfg.seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            std::cerr << "error: RULXAI_SEED is not an integer: " << env_seed << "\n";
            return 2;
        }
    }

    try {
        if (ingest->parsed()) return cmd_ingest(cfg);
        if (select->parsed()) return cmd_select(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (explain->parsed()) return cmd_explain(cfg);
        if (interpret->parsed()) return cmd_interpret(cfg);
        if (diagnose->parsed()) return cmd_diagnose(cfg);
        if (report->parsed()) return cmd_report(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
