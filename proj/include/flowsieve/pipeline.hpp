#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsieve/classifiers.hpp"
#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/evaluation.hpp"
#include "flowsieve/explain.hpp"
#include "flowsieve/flowdata.hpp"
#include "flowsieve/hybridselect.hpp"
#include "flowsieve/parallel.hpp"
#include "flowsieve/scaling.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

// Resolved configuration of a full run. Every field has a JSON key of the
// same name (flags override file values in the CLI); the hash of the
// resolved JSON is embedded in every artifact it produces.
struct PipelineConfig {
    std::vector<std::string> inputs;  // CSVs to ingest, or
    std::string dataset_path;         // a prebuilt dataset container

    std::string profile = "custom";  // cic-ids2017 | cic-iot2023 | custom
    std::string label_column;
    LabelRule rule;
    bool rule_set = false;
    std::vector<std::string> drop_columns;
    std::vector<std::string> text_columns;  // schema overrides: force text
    bool drop_text_columns = true;

    bool scale = true;
    std::string scale_fit_on = "all";  // all | train

    SelectionConfig selection;

    std::string model = "gbdt";
    nlohmann::json model_params = nlohmann::json::object();

    double test_fraction = 0.3;
    size_t cv_folds = 0;  // 0 = skip cross-validation
    std::string mse_mode = "hard";  // hard | brier

    uint64_t seed = 0;
    bool seed_set = false;

    std::string out_dir;
    unsigned threads = 0;
};

namespace pipedetail {

inline void apply_profile(PipelineConfig& cfg) {
    if (cfg.profile == "cic-ids2017") {
        if (cfg.label_column.empty()) cfg.label_column = "Label";
        if (!cfg.rule_set) {
            cfg.rule = cic_ids2017_rule();
            cfg.rule_set = true;
        }
        for (const char* c : {"Flow ID", "Source IP", "Destination IP"})
            cfg.drop_columns.push_back(c);
    } else if (cfg.profile == "cic-iot2023") {
        if (cfg.label_column.empty()) cfg.label_column = "label";
        if (!cfg.rule_set) {
            cfg.rule = cic_iot2023_rule();
            cfg.rule_set = true;
        }
    } else if (cfg.profile != "custom") {
        throw ConfigError("unknown profile: " + cfg.profile);
    }
}

}  // namespace pipedetail

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "inputs", "dataset", "profile", "label_column", "rules", "drop_columns",
        "text_columns", "drop_text_columns", "scale", "scale_fit_on", "selection",
        "model", "model_params", "test_fraction", "cv_folds", "mse_mode", "seed",
        "out_dir", "threads"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key: " + key);
    }
    PipelineConfig cfg;
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    get("inputs", cfg.inputs);
    get("dataset", cfg.dataset_path);
    get("profile", cfg.profile);
    get("label_column", cfg.label_column);
    if (j.contains("rules")) {
        cfg.rule = label_rule_from_json(j.at("rules"));
        cfg.rule_set = true;
    }
    get("drop_columns", cfg.drop_columns);
    get("text_columns", cfg.text_columns);
    get("drop_text_columns", cfg.drop_text_columns);
    get("scale", cfg.scale);
    get("scale_fit_on", cfg.scale_fit_on);
    if (j.contains("selection")) {
        const auto& s = j.at("selection");
        if (s.contains("bins")) cfg.selection.bins = s.at("bins").get<int>();
        if (s.contains("inclusive_positive"))
            cfg.selection.inclusive_positive = s.at("inclusive_positive").get<bool>();
        if (s.contains("inclusive_negative"))
            cfg.selection.inclusive_negative = s.at("inclusive_negative").get<bool>();
        if (s.contains("ig_strict")) cfg.selection.ig_strict = s.at("ig_strict").get<bool>();
    }
    get("model", cfg.model);
    if (j.contains("model_params")) cfg.model_params = j.at("model_params");
    get("test_fraction", cfg.test_fraction);
    get("cv_folds", cfg.cv_folds);
    get("mse_mode", cfg.mse_mode);
    if (j.contains("seed")) {
        cfg.seed = j.at("seed").get<uint64_t>();
        cfg.seed_set = true;
    }
    get("out_dir", cfg.out_dir);
    get("threads", cfg.threads);
    return cfg;
}

// The resolved config, with defaults applied, used for hashing and audit.
inline nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
    return {
        {"inputs", cfg.inputs},
        {"dataset", cfg.dataset_path},
        {"profile", cfg.profile},
        {"label_column", cfg.label_column},
        {"rules", cfg.rule_set ? label_rule_to_json(cfg.rule) : nlohmann::json(nullptr)},
        {"drop_columns", cfg.drop_columns},
        {"text_columns", cfg.text_columns},
        {"drop_text_columns", cfg.drop_text_columns},
        {"scale", cfg.scale},
        {"scale_fit_on", cfg.scale_fit_on},
        {"selection",
         {{"bins", cfg.selection.bins},
          {"inclusive_positive", cfg.selection.inclusive_positive},
          {"inclusive_negative", cfg.selection.inclusive_negative},
          {"ig_strict", cfg.selection.ig_strict}}},
        {"model", cfg.model},
        {"model_params", cfg.model_params},
        {"test_fraction", cfg.test_fraction},
        {"cv_folds", cfg.cv_folds},
        {"mse_mode", cfg.mse_mode},
        {"seed", cfg.seed},
        {"out_dir", cfg.out_dir},
        {"threads", cfg.threads},
    };
}

inline std::string config_hash_hex(const PipelineConfig& cfg) {
    return hash_hex(fnv1a_str(pipeline_config_to_json(cfg).dump()));
}

inline void validate_pipeline_config(const PipelineConfig& cfg) {
    if (cfg.inputs.empty() && cfg.dataset_path.empty())
        throw ConfigError("config needs 'inputs' (CSV paths) or 'dataset'");
    if (!cfg.inputs.empty() && !cfg.dataset_path.empty())
        throw ConfigError("config has both 'inputs' and 'dataset'; pick one");
    if (!cfg.inputs.empty() && cfg.label_column.empty())
        throw ConfigError("csv ingestion needs 'label_column' (or a profile)");
    if (!cfg.seed_set) throw ConfigError("'seed' is mandatory; there is no clock default");
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        throw ConfigError("test_fraction must be in (0, 1)");
    if (cfg.cv_folds == 1) throw ConfigError("cv_folds must be 0 (off) or >= 2");
    if (cfg.scale_fit_on != "all" && cfg.scale_fit_on != "train")
        throw ConfigError("scale_fit_on must be 'all' or 'train'");
    if (cfg.mse_mode != "hard" && cfg.mse_mode != "brier")
        throw ConfigError("mse_mode must be 'hard' or 'brier'");
    if (cfg.model != "tree" && cfg.model != "forest" && cfg.model != "gbdt" &&
        cfg.model != "knn")
        throw ConfigError("model must be tree|forest|gbdt|knn");
    if (cfg.selection.bins < 2) throw ConfigError("selection.bins must be >= 2");
    if (cfg.out_dir.empty()) throw ConfigError("'out_dir' is required");
    for (const auto& path : cfg.inputs) {
        if (!std::filesystem::exists(path))
            throw ConfigError("input file does not exist: " + path);
    }
    if (!cfg.dataset_path.empty() && !std::filesystem::exists(cfg.dataset_path))
        throw ConfigError("dataset file does not exist: " + cfg.dataset_path);
}

struct PipelineResult {
    IngestReport ingest;
    SelectionTrace trace;
    EvalReport eval;
    ImportanceReport importance;
    bool has_importance = false;
    std::map<std::string, std::string> artifacts;  // name -> path
    std::string config_hash;
};

namespace pipedetail {

inline void write_json_artifact(const std::string& path, nlohmann::json j,
                                const std::string& config_hash) {
    j["config_hash"] = config_hash;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    os << j.dump(2) << '\n';
    if (!os) throw DataError("write failed: " + path);
}

// ingest: load every CSV, concatenate, clean, drop identifier and (by
// default) any remaining text columns, binarize labels.
inline Dataset ingest_csvs(const PipelineConfig& cfg, IngestReport& report) {
    SchemaOverrides overrides;
    for (const auto& name : cfg.text_columns) overrides[name] = ColumnType::kText;
    std::vector<RawTable> tables;
    for (const auto& path : cfg.inputs) {
        LoadReport lr;
        tables.push_back(load_csv(path, overrides, &lr));
        for (auto& w : lr.warnings) report.warnings.push_back(path + ": " + w);
    }
    RawTable table = concat_tables(std::move(tables));

    CleanStats stats;
    table = clean(table, &stats);
    report.rows_in = stats.rows_in;
    report.rows_dropped = stats.rows_dropped;

    std::vector<std::string> to_drop = cfg.drop_columns;
    if (cfg.drop_text_columns) {
        for (const auto& col : table.columns) {
            if (col.type == ColumnType::kText && col.name != cfg.label_column) {
                to_drop.push_back(col.name);
                report.warnings.push_back("dropped text column '" + col.name + "'");
            }
        }
    }
    if (!to_drop.empty()) table = drop_columns(table, to_drop, &report.warnings);

    if (!cfg.rule_set)
        throw ConfigError("csv ingestion needs a label rule ('rules' or a profile)");
    BinarizeReport br;
    Dataset d = binarize_labels(table, cfg.rule, cfg.label_column, &br);
    report.benign = br.benign;
    report.attack = br.attack;
    report.dropped_unknown = br.dropped_unknown;
    for (auto& w : br.warnings) report.warnings.push_back(w);
    validate_dataset(d);
    return d;
}

}  // namespace pipedetail

// Executes ingest -> clean -> drop -> binarize -> scale -> select -> split ->
// train -> evaluate -> optional cv -> explain, writing one artifact per
// stage. Timing and timestamps go to run_meta.json only, so re-running an
// identical config reproduces every other artifact byte for byte.
inline PipelineResult run_pipeline(PipelineConfig cfg, bool dry_run = false,
                                   std::ostream* log = nullptr) {
    pipedetail::apply_profile(cfg);
    validate_pipeline_config(cfg);
    if (cfg.threads > 0) set_thread_cap(cfg.threads);

    PipelineResult result;
    result.config_hash = config_hash_hex(cfg);
    auto say = [&](const std::string& msg) {
        if (log) *log << "[flowsieve] " << msg << '\n';
    };
    say("config hash " + result.config_hash);
    if (dry_run) {
        say("dry run: config is valid");
        return result;
    }

    std::filesystem::create_directories(cfg.out_dir);
    auto artifact = [&](const std::string& name) {
        const std::string path =
            (std::filesystem::path(cfg.out_dir) / name).string();
        result.artifacts[name] = path;
        return path;
    };
    const auto wall_start = std::chrono::system_clock::now();
    const auto t_start = std::chrono::steady_clock::now();

    // ingest
    Dataset dataset;
    if (!cfg.inputs.empty()) {
        dataset = pipedetail::ingest_csvs(cfg, result.ingest);
        pipedetail::write_json_artifact(artifact("cleaning_report.json"),
                                        ingest_report_to_json(result.ingest),
                                        result.config_hash);
    } else {
        dataset = load_dataset(cfg.dataset_path);
        result.ingest.rows_in = dataset.n_rows;
        auto [n0, n1] = dataset.class_counts();
        result.ingest.benign = n0;
        result.ingest.attack = n1;
    }
    say("dataset: " + std::to_string(dataset.n_rows) + " rows x " +
        std::to_string(dataset.n_features) + " features");
    save_dataset(dataset, artifact("dataset.fsds"),
                 {{"schema_version", kSchemaVersion},
                  {"config_hash", result.config_hash},
                  {"stage", "ingest"}});

    if (!dataset.both_classes_present())
        throw DataError("pipeline: both classes are required past ingestion");

    // scale
    Dataset working = dataset;
    if (cfg.scale) {
        ScalerParams scaler;
        if (cfg.scale_fit_on == "train") {
            auto [train_u, test_u] = stratified_split(dataset, cfg.test_fraction, cfg.seed);
            scaler = fit_scaler(train_u);
        } else {
            scaler = fit_scaler(dataset);
        }
        working = transform(scaler, dataset);
        pipedetail::write_json_artifact(artifact("scaler.json"),
                                        scaler_to_json(scaler), result.config_hash);
        say("scaled " + std::to_string(working.n_features) + " features (fit on " +
            cfg.scale_fit_on + ")");
    }

    // select
    result.trace = select(working, cfg.selection);
    pipedetail::write_json_artifact(artifact("trace.json"),
                                    trace_to_json(result.trace, cfg.selection),
                                    result.config_hash);
    say("selected " + std::to_string(result.trace.a6.size()) + " of " +
        std::to_string(working.n_features) + " features");
    if (result.trace.a6.empty())
        throw DataError("selection produced an empty feature set");
    const Dataset restricted = select_features(working, result.trace.a6);

    // split
    auto [train_set, test_set] =
        stratified_split(restricted, cfg.test_fraction, cfg.seed);
    say("split: " + std::to_string(train_set.n_rows) + " train / " +
        std::to_string(test_set.n_rows) + " test rows");

    // train
    std::vector<std::string> train_warnings;
    auto trainer = [&](const Dataset& t) {
        return train_model(cfg.model, t, cfg.model_params, &train_warnings);
    };
    ClassifierModel model;
    double train_seconds = 0.0;
    try {
        auto [m, secs] = timed_train(trainer, train_set);
        model = std::move(m);
        train_seconds = secs;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw TrainError(std::string("training failed: ") + e.what());
    }
    for (const auto& w : train_warnings) say("warning: " + w);
    pipedetail::write_json_artifact(artifact("model.json"), model_to_json(model),
                                    result.config_hash);
    {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "trained %s in %.2f seconds",
                      cfg.model.c_str(), train_seconds);
        say(buf);
    }

    // evaluate
    result.eval = evaluate_model(model, test_set, cfg.mse_mode == "brier");
    result.eval.train_seconds = train_seconds;

    // cross-validate
    if (cfg.cv_folds >= 2) {
        result.eval.cv_fold_accuracies =
            kfold_cv(restricted, cfg.cv_folds, trainer, cfg.seed);
        say("cross-validated with " + std::to_string(cfg.cv_folds) + " folds");
    }
    pipedetail::write_json_artifact(artifact("eval.json"),
                                    eval_report_to_json(result.eval),
                                    result.config_hash);

    // explain
    if (cfg.model != "knn") {
        result.importance = feature_importance(model);
        result.has_importance = true;
        pipedetail::write_json_artifact(artifact("importance.json"),
                                        importance_to_json(result.importance),
                                        result.config_hash);
        std::ofstream md(artifact("report.md"), std::ios::binary);
        md << render_report_markdown(result.trace, result.eval, result.importance)
           << "\nconfig hash: " << result.config_hash << "\n";
    } else {
        say("skipping importance: not defined for knn");
    }

    // run metadata (timestamps and wall-clock times live here, not in the
    // deterministic artifacts)
    const auto t_end = std::chrono::steady_clock::now();
    const auto now_unix = std::chrono::duration_cast<std::chrono::seconds>(
                              wall_start.time_since_epoch())
                              .count();
    nlohmann::json meta = {
        {"schema_version", kSchemaVersion},
        {"flowsieve_version", kVersion},
        {"config", pipeline_config_to_json(cfg)},
        {"config_hash", result.config_hash},
        {"started_unix", now_unix},
        {"train_seconds", train_seconds},
        {"total_seconds",
         std::chrono::duration_cast<std::chrono::duration<double>>(t_end - t_start)
             .count()},
    };
    {
        std::ofstream os(artifact("run_meta.json"), std::ios::binary);
        os << meta.dump(2) << '\n';
    }
    say("done");
    return result;
}

}  // namespace flowsieve
