// flowsieve: DDoS flow-classification toolkit built around a hybrid
// correlation / information-gain feature selector. Subcommands mirror the
// pipeline stages so each one can be run and audited in isolation.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "flowsieve/classifiers.hpp"
#include "flowsieve/csv.hpp"
#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/evaluation.hpp"
#include "flowsieve/explain.hpp"
#include "flowsieve/flowdata.hpp"
#include "flowsieve/hybridselect.hpp"
#include "flowsieve/parallel.hpp"
#include "flowsieve/pipeline.hpp"
#include "flowsieve/scaling.hpp"
#include "flowsieve/stats.hpp"
#include "flowsieve/synth.hpp"
#include "flowsieve/version.hpp"

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw flowsieve::ConfigError("cannot open JSON file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw flowsieve::ConfigError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw flowsieve::DataError("cannot open for writing: " + path);
    os << j.dump(2) << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw flowsieve::DataError("cannot open for writing: " + path);
    os << text;
}

json parse_params(const std::string& text) {
    if (text.empty()) return json::object();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw flowsieve::ConfigError(std::string("bad --params JSON: ") + e.what());
    }
}

void log(const std::string& msg) { std::cerr << "[flowsieve] " << msg << '\n'; }

// Restricts a dataset to the model's (or trace's) feature set when needed.
flowsieve::Dataset align_features(const flowsieve::Dataset& d,
                                  const std::vector<std::string>& names) {
    if (d.feature_names == names) return d;
    return flowsieve::select_features(d, names);
}

struct IngestArgs {
    std::vector<std::string> inputs;
    std::string label_col;
    std::string profile = "custom";
    std::string rules_path;
    std::vector<std::string> drop;
    std::vector<std::string> text_cols;
    bool keep_text = false;
    std::string out;
    std::string report_path;
};

int cmd_ingest(const IngestArgs& args) {
    flowsieve::PipelineConfig cfg;
    cfg.inputs = args.inputs;
    cfg.profile = args.profile;
    cfg.label_column = args.label_col;
    if (!args.rules_path.empty()) {
        cfg.rule = flowsieve::label_rule_from_json(read_json_file(args.rules_path));
        cfg.rule_set = true;
    }
    cfg.drop_columns = args.drop;
    cfg.text_columns = args.text_cols;
    cfg.drop_text_columns = !args.keep_text;
    flowsieve::pipedetail::apply_profile(cfg);
    if (cfg.label_column.empty())
        throw flowsieve::ConfigError("--label-col is required (or use a profile)");
    if (!cfg.rule_set)
        throw flowsieve::ConfigError("--rules is required for the custom profile");
    for (const auto& path : cfg.inputs) {
        if (!std::filesystem::exists(path))
            throw flowsieve::ConfigError("input file does not exist: " + path);
    }

    flowsieve::IngestReport report;
    const flowsieve::Dataset d = flowsieve::pipedetail::ingest_csvs(cfg, report);
    for (const auto& w : report.warnings) log("warning: " + w);
    flowsieve::save_dataset(d, args.out,
                            {{"schema_version", flowsieve::kSchemaVersion},
                             {"stage", "ingest"}});
    log("wrote " + args.out + " (" + std::to_string(d.n_rows) + " rows x " +
        std::to_string(d.n_features) + " features; benign " +
        std::to_string(report.benign) + ", attack " + std::to_string(report.attack) +
        ")");
    const json rj = flowsieve::ingest_report_to_json(report);
    if (!args.report_path.empty()) write_json_file(args.report_path, rj);
    std::cout << rj.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowsieve: hybrid feature selection and DDoS flow classification"};
    app.set_version_flag("--version", flowsieve::kVersion);
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "cap worker threads (0 = hardware)");

    // ingest ----------------------------------------------------------------
    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "CSV -> cleaned binary dataset");
    c_ingest->add_option("--input", ingest.inputs, "input CSV file(s)")->required();
    c_ingest->add_option("--label-col", ingest.label_col, "label column name");
    c_ingest->add_option("--profile", ingest.profile,
                         "cic-ids2017 | cic-iot2023 | custom");
    c_ingest->add_option("--rules", ingest.rules_path, "label rule JSON file");
    c_ingest->add_option("--drop", ingest.drop, "columns to drop");
    c_ingest->add_option("--text-col", ingest.text_cols,
                         "force these columns to parse as text");
    c_ingest->add_flag("--keep-text", ingest.keep_text,
                       "do not auto-drop non-label text columns");
    c_ingest->add_option("--out", ingest.out, "output dataset file")->required();
    c_ingest->add_option("--report", ingest.report_path, "cleaning report JSON path");

    // synth -----------------------------------------------------------------
    flowsieve::SynthSpec synth_spec;
    std::string synth_out, synth_truth_out;
    bool synth_seed_set = false;
    auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
    c_synth->add_option("--rows", synth_spec.n_rows, "row count");
    c_synth->add_option("--informative", synth_spec.n_informative,
                        "label-correlated feature count");
    c_synth->add_option("--noise", synth_spec.n_noise, "noise feature count");
    c_synth->add_option("--imbalance", synth_spec.positive_fraction,
                        "positive-class fraction");
    c_synth->add_option("--flip", synth_spec.flip_rate, "label flip rate");
    c_synth->add_option("--separation", synth_spec.separation,
                        "class mean separation in sigmas");
    c_synth->add_option("--seed", synth_spec.seed, "RNG seed (required)")
        ->each([&](const std::string&) { synth_seed_set = true; });
    c_synth->add_option("--out", synth_out, "output dataset file")->required();
    c_synth->add_option("--truth-out", synth_truth_out,
                        "ground-truth JSON path (default <out>.truth.json)");

    // select ----------------------------------------------------------------
    std::string sel_dataset, sel_out, sel_table_csv;
    flowsieve::SelectionConfig sel_cfg;
    bool sel_ig_inclusive = false, sel_strict_pos = false, sel_strict_neg = false;
    auto* c_select = app.add_subcommand("select", "run the hybrid feature selector");
    c_select->add_option("--dataset", sel_dataset, "dataset file")->required();
    c_select->add_option("--bins", sel_cfg.bins, "equal-frequency bins for info gain");
    c_select->add_flag("--ig-inclusive", sel_ig_inclusive,
                       "admit info gain equal to the mean (default strictly above)");
    c_select->add_flag("--strict-positive", sel_strict_pos,
                       "use > instead of >= on positive thresholds");
    c_select->add_flag("--strict-negative", sel_strict_neg,
                       "use < instead of <= on negative thresholds");
    c_select->add_option("--out", sel_out, "trace JSON path")->required();
    c_select->add_option("--table-csv", sel_table_csv,
                         "also write the correlation table as CSV");

    // train -----------------------------------------------------------------
    std::string tr_dataset, tr_trace, tr_model = "gbdt", tr_params, tr_out, tr_scaler_out;
    double tr_test_fraction = 0.3;
    uint64_t tr_seed = 0;
    bool tr_seed_set = false, tr_full = false, tr_scale = false;
    auto* c_train = app.add_subcommand("train", "train a classifier");
    c_train->add_option("--dataset", tr_dataset, "dataset file")->required();
    c_train->add_option("--trace", tr_trace, "selection trace JSON (restricts features)");
    c_train->add_option("--model", tr_model, "tree | forest | gbdt | knn");
    c_train->add_option("--params", tr_params, "hyperparameters as inline JSON");
    c_train->add_option("--test-fraction", tr_test_fraction,
                        "held-out fraction excluded from training");
    c_train->add_option("--seed", tr_seed, "split/model seed (required)")
        ->each([&](const std::string&) { tr_seed_set = true; });
    c_train->add_flag("--full", tr_full, "train on every row (no held-out split)");
    c_train->add_flag("--scale", tr_scale, "standardize features before training");
    c_train->add_option("--scaler-out", tr_scaler_out,
                        "where to write scaler JSON (with --scale)");
    c_train->add_option("--out", tr_out, "model JSON path")->required();

    // evaluate ----------------------------------------------------------------
    std::string ev_dataset, ev_model, ev_scaler, ev_out, ev_mse = "hard";
    double ev_test_fraction = 0.3;
    uint64_t ev_seed = 0;
    bool ev_seed_set = false, ev_full = false;
    auto* c_eval = app.add_subcommand("evaluate", "evaluate a trained model");
    c_eval->add_option("--dataset", ev_dataset, "dataset file")->required();
    c_eval->add_option("--model", ev_model, "model JSON file")->required();
    c_eval->add_option("--scaler", ev_scaler, "apply this scaler before predicting");
    c_eval->add_option("--test-fraction", ev_test_fraction,
                       "evaluate on this held-out fraction");
    c_eval->add_option("--seed", ev_seed, "split seed (must match train)")
        ->each([&](const std::string&) { ev_seed_set = true; });
    c_eval->add_flag("--full", ev_full, "evaluate on every row");
    c_eval->add_option("--mse", ev_mse, "hard | brier");
    c_eval->add_option("--out", ev_out, "eval report JSON path");

    // cv ----------------------------------------------------------------------
    std::string cv_dataset, cv_trace, cv_model = "gbdt", cv_params, cv_out;
    size_t cv_folds = 5;
    uint64_t cv_seed = 0;
    bool cv_seed_set = false;
    auto* c_cv = app.add_subcommand("cv", "stratified k-fold cross-validation");
    c_cv->add_option("--dataset", cv_dataset, "dataset file")->required();
    c_cv->add_option("--trace", cv_trace, "selection trace JSON (restricts features)");
    c_cv->add_option("--model", cv_model, "tree | forest | gbdt | knn");
    c_cv->add_option("--params", cv_params, "hyperparameters as inline JSON");
    c_cv->add_option("--folds", cv_folds, "fold count");
    c_cv->add_option("--seed", cv_seed, "fold seed (required)")
        ->each([&](const std::string&) { cv_seed_set = true; });
    c_cv->add_option("--out", cv_out, "per-fold accuracy JSON path");

    // explain -------------------------------------------------------------------
    std::string ex_model, ex_trace, ex_eval, ex_format = "json", ex_out;
    size_t ex_top = 20;
    auto* c_explain = app.add_subcommand("explain", "feature importance report");
    c_explain->add_option("--model", ex_model, "model JSON file")->required();
    c_explain->add_option("--trace", ex_trace, "selection trace JSON file")->required();
    c_explain->add_option("--eval", ex_eval, "eval report JSON (enriches md output)");
    c_explain->add_option("--top", ex_top, "rows in the ranking");
    c_explain->add_option("--format", ex_format, "json | md | csv");
    c_explain->add_option("--out", ex_out, "output path (default stdout)");

    // pipeline --------------------------------------------------------------
    std::string pl_config;
    std::vector<std::string> pl_inputs;
    std::string pl_dataset, pl_profile, pl_label_col, pl_rules, pl_model, pl_out_dir;
    std::string pl_mse;
    double pl_test_fraction = -1.0;
    int pl_bins = 0;
    long long pl_cv_folds = -1;
    uint64_t pl_seed = 0;
    bool pl_seed_set = false, pl_dry_run = false, pl_no_scale = false;
    auto* c_pipe = app.add_subcommand("pipeline", "run every stage end to end");
    c_pipe->add_option("--config", pl_config, "pipeline config JSON file");
    c_pipe->add_option("--input", pl_inputs, "override: input CSV file(s)");
    c_pipe->add_option("--dataset", pl_dataset, "override: prebuilt dataset file");
    c_pipe->add_option("--profile", pl_profile, "override: dataset profile");
    c_pipe->add_option("--label-col", pl_label_col, "override: label column");
    c_pipe->add_option("--rules", pl_rules, "override: label rule JSON file");
    c_pipe->add_option("--model", pl_model, "override: model kind");
    c_pipe->add_option("--test-fraction", pl_test_fraction, "override: test fraction");
    c_pipe->add_option("--cv-folds", pl_cv_folds, "override: cv folds (0 = off)");
    c_pipe->add_option("--bins", pl_bins, "override: selection bins");
    c_pipe->add_option("--mse", pl_mse, "override: mse mode");
    c_pipe->add_option("--seed", pl_seed, "override: seed")
        ->each([&](const std::string&) { pl_seed_set = true; });
    c_pipe->add_option("--out-dir", pl_out_dir, "override: artifact directory");
    c_pipe->add_flag("--no-scale", pl_no_scale, "override: skip standardization");
    c_pipe->add_flag("--dry-run", pl_dry_run, "validate config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        flowsieve::set_thread_cap(threads);

        if (*c_ingest) return cmd_ingest(ingest);

        if (*c_synth) {
            if (!synth_seed_set)
                throw flowsieve::ConfigError("--seed is mandatory; there is no clock default");
            const auto result = flowsieve::generate(synth_spec);
            flowsieve::save_dataset(result.dataset, synth_out,
                                    {{"schema_version", flowsieve::kSchemaVersion},
                                     {"stage", "synth"}});
            const std::string truth_path =
                synth_truth_out.empty() ? synth_out + ".truth.json" : synth_truth_out;
            write_json_file(truth_path,
                            flowsieve::synth_truth_to_json(synth_spec, result));
            log("wrote " + synth_out + " and " + truth_path);
            return 0;
        }

        if (*c_select) {
            sel_cfg.ig_strict = !sel_ig_inclusive;
            sel_cfg.inclusive_positive = !sel_strict_pos;
            sel_cfg.inclusive_negative = !sel_strict_neg;
            const auto d = flowsieve::load_dataset(sel_dataset);
            const auto table = flowsieve::correlation_table(d, sel_cfg.bins);
            const auto trace = flowsieve::select_from_table(table, sel_cfg);
            write_json_file(sel_out, flowsieve::trace_to_json(trace, sel_cfg));
            if (!sel_table_csv.empty())
                write_text_file(sel_table_csv, flowsieve::correlation_table_to_csv(table));
            log("selected " + std::to_string(trace.a6.size()) + " of " +
                std::to_string(d.n_features) + " features -> " + sel_out);
            return 0;
        }

        if (*c_train) {
            if (!tr_seed_set)
                throw flowsieve::ConfigError("--seed is mandatory; there is no clock default");
            flowsieve::Dataset d = flowsieve::load_dataset(tr_dataset);
            if (!tr_trace.empty()) {
                const auto trace = flowsieve::trace_from_json(read_json_file(tr_trace));
                d = flowsieve::select_features(d, trace.a6);
            }
            if (tr_scale) {
                const auto scaler = flowsieve::fit_scaler(d);
                d = flowsieve::transform(scaler, d);
                if (!tr_scaler_out.empty())
                    write_json_file(tr_scaler_out, flowsieve::scaler_to_json(scaler));
            }
            flowsieve::Dataset train_set = d;
            if (!tr_full) {
                auto [train_part, test_part] =
                    flowsieve::stratified_split(d, tr_test_fraction, tr_seed);
                train_set = std::move(train_part);
            }
            json params = parse_params(tr_params);
            if ((tr_model == "forest" || tr_model == "gbdt") && !params.contains("seed"))
                params["seed"] = tr_seed;
            std::vector<std::string> warnings;
            auto trainer = [&](const flowsieve::Dataset& t) {
                return flowsieve::train_model(tr_model, t, params, &warnings);
            };
            auto [model, seconds] = flowsieve::timed_train(trainer, train_set);
            for (const auto& w : warnings) log("warning: " + w);
            write_json_file(tr_out, flowsieve::model_to_json(model));
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.2f", seconds);
            log("trained " + tr_model + " on " + std::to_string(train_set.n_rows) +
                " rows in " + buf + " seconds -> " + tr_out);
            return 0;
        }

        if (*c_eval) {
            flowsieve::Dataset d = flowsieve::load_dataset(ev_dataset);
            const auto model = flowsieve::model_from_json(read_json_file(ev_model));
            if (!ev_scaler.empty()) {
                const auto scaler =
                    flowsieve::scaler_from_json(read_json_file(ev_scaler));
                d = flowsieve::transform(scaler, d);
            }
            d = align_features(d, flowsieve::model_feature_names(model));
            flowsieve::Dataset eval_set = d;
            if (!ev_full) {
                if (!ev_seed_set)
                    throw flowsieve::ConfigError(
                        "--seed is required to reproduce the train/test split "
                        "(or pass --full)");
                auto [train_part, test_part] =
                    flowsieve::stratified_split(d, ev_test_fraction, ev_seed);
                eval_set = std::move(test_part);
            }
            if (ev_mse != "hard" && ev_mse != "brier")
                throw flowsieve::ConfigError("--mse must be hard or brier");
            const auto report =
                flowsieve::evaluate_model(model, eval_set, ev_mse == "brier");
            std::cout << flowsieve::render_text_table(report);
            if (!ev_out.empty())
                write_json_file(ev_out, flowsieve::eval_report_to_json(report));
            return 0;
        }

        if (*c_cv) {
            if (!cv_seed_set)
                throw flowsieve::ConfigError("--seed is mandatory; there is no clock default");
            flowsieve::Dataset d = flowsieve::load_dataset(cv_dataset);
            if (!cv_trace.empty()) {
                const auto trace = flowsieve::trace_from_json(read_json_file(cv_trace));
                d = flowsieve::select_features(d, trace.a6);
            }
            json params = parse_params(cv_params);
            if ((cv_model == "forest" || cv_model == "gbdt") && !params.contains("seed"))
                params["seed"] = cv_seed;
            auto trainer = [&](const flowsieve::Dataset& t) {
                return flowsieve::train_model(cv_model, t, params);
            };
            const auto accuracies = flowsieve::kfold_cv(d, cv_folds, trainer, cv_seed);
            json out = {{"schema_version", flowsieve::kSchemaVersion},
                        {"model", cv_model},
                        {"folds", cv_folds},
                        {"fold_accuracies", accuracies}};
            std::cout << out.dump(2) << '\n';
            if (!cv_out.empty()) write_json_file(cv_out, out);
            return 0;
        }

        if (*c_explain) {
            const auto model = flowsieve::model_from_json(read_json_file(ex_model));
            const auto trace = flowsieve::trace_from_json(read_json_file(ex_trace));
            const auto importance = flowsieve::feature_importance(model);
            std::string text;
            if (ex_format == "json") {
                json j = flowsieve::importance_to_json(importance);
                j["selected_features"] = trace.a6;
                text = j.dump(2) + "\n";
            } else if (ex_format == "csv") {
                text = flowsieve::importance_to_csv(importance, ex_top);
            } else if (ex_format == "md") {
                flowsieve::EvalReport eval;
                if (!ex_eval.empty()) {
                    const json ej = read_json_file(ex_eval);
                    eval.metrics.accuracy = ej.at("accuracy").get<double>();
                    eval.metrics.precision_weighted =
                        ej.at("precision_weighted").get<double>();
                    eval.metrics.recall_weighted = ej.at("recall_weighted").get<double>();
                    eval.metrics.f1_weighted = ej.at("f1_weighted").get<double>();
                    eval.mse = ej.at("mse").get<double>();
                    if (ej.contains("cv_fold_accuracies"))
                        eval.cv_fold_accuracies =
                            ej.at("cv_fold_accuracies").get<std::vector<double>>();
                }
                text = flowsieve::render_report_markdown(trace, eval, importance, ex_top);
            } else {
                throw flowsieve::ConfigError("--format must be json, md, or csv");
            }
            if (ex_out.empty())
                std::cout << text;
            else
                write_text_file(ex_out, text);
            return 0;
        }

        if (*c_pipe) {
            json cj = pl_config.empty() ? json::object() : read_json_file(pl_config);
            if (!pl_inputs.empty()) cj["inputs"] = pl_inputs;
            if (!pl_dataset.empty()) cj["dataset"] = pl_dataset;
            if (!pl_profile.empty()) cj["profile"] = pl_profile;
            if (!pl_label_col.empty()) cj["label_column"] = pl_label_col;
            if (!pl_rules.empty()) cj["rules"] = read_json_file(pl_rules);
            if (!pl_model.empty()) cj["model"] = pl_model;
            if (pl_test_fraction >= 0.0) cj["test_fraction"] = pl_test_fraction;
            if (pl_cv_folds >= 0) cj["cv_folds"] = pl_cv_folds;
            if (pl_bins > 0) cj["selection"]["bins"] = pl_bins;
            if (!pl_mse.empty()) cj["mse_mode"] = pl_mse;
            if (pl_seed_set) cj["seed"] = pl_seed;
            if (!pl_out_dir.empty()) cj["out_dir"] = pl_out_dir;
            if (pl_no_scale) cj["scale"] = false;
            if (threads > 0) cj["threads"] = threads;
            auto cfg = flowsieve::pipeline_config_from_json(cj);
            flowsieve::run_pipeline(std::move(cfg), pl_dry_run, &std::cerr);
            return 0;
        }
    } catch (const flowsieve::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const flowsieve::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const flowsieve::TrainError& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
