#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "flowsieve/classifiers.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/evaluation.hpp"
#include "flowsieve/hybridselect.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

// Gain-based importances: per feature, the sum of the stored split gains
// across the whole ensemble (Gini decrease for tree/forest, boosting gain
// for gbdt). entries covers every model feature, sorted by gain descending
// with ties kept in feature order; normalized values sum to 1 when any split
// exists.
struct ImportanceReport {
    struct Entry {
        std::string feature;
        double gain = 0.0;
        double normalized = 0.0;
    };
    std::vector<Entry> entries;
    double total_gain = 0.0;
    std::string model_type;
};

namespace explaindetail {

inline void accumulate_tree_gains(const DecisionTree& t, std::vector<double>& gains) {
    for (const auto& n : t.nodes) {
        if (n.feature >= 0) gains[static_cast<size_t>(n.feature)] += n.gain;
    }
}

}  // namespace explaindetail

inline ImportanceReport feature_importance(const ClassifierModel& m) {
    if (std::holds_alternative<KnnModel>(m))
        throw DataError("feature_importance: k-NN has no split gains");
    const auto& names = model_feature_names(m);
    std::vector<double> gains(names.size(), 0.0);
    std::visit([&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, TreeModel>) {
            explaindetail::accumulate_tree_gains(model.tree, gains);
        } else if constexpr (std::is_same_v<T, ForestModel> ||
                             std::is_same_v<T, GbdtModel>) {
            for (const auto& t : model.trees)
                explaindetail::accumulate_tree_gains(t, gains);
        }
    }, m);

    ImportanceReport report;
    report.model_type = model_type(m);
    report.total_gain = std::accumulate(gains.begin(), gains.end(), 0.0);

    std::vector<size_t> order(names.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return gains[a] > gains[b]; });
    for (size_t i : order) {
        ImportanceReport::Entry e;
        e.feature = names[i];
        e.gain = gains[i];
        e.normalized = report.total_gain > 0.0 ? gains[i] / report.total_gain : 0.0;
        report.entries.push_back(std::move(e));
    }
    return report;
}

inline nlohmann::json importance_to_json(const ImportanceReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"feature", e.feature},
                           {"gain", e.gain},
                           {"normalized", e.normalized}});
    }
    return {{"schema_version", kSchemaVersion},
            {"model_type", r.model_type},
            {"total_gain", r.total_gain},
            {"ranking", entries}};
}

inline ImportanceReport importance_from_json(const nlohmann::json& j) {
    ImportanceReport r;
    r.model_type = j.at("model_type").get<std::string>();
    r.total_gain = j.at("total_gain").get<double>();
    for (const auto& ej : j.at("ranking")) {
        r.entries.push_back({ej.at("feature").get<std::string>(),
                             ej.at("gain").get<double>(),
                             ej.at("normalized").get<double>()});
    }
    return r;
}

inline std::string importance_to_csv(const ImportanceReport& r, size_t top_n = 0) {
    std::ostringstream os;
    os << "feature,gain,normalized\n";
    size_t count = 0;
    for (const auto& e : r.entries) {
        if (top_n > 0 && count++ >= top_n) break;
        std::string name = e.feature;
        if (name.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : name) {
                if (c == '"') q += '"';
                q += c;
            }
            name = q + "\"";
        }
        char a[32], b[32];
        auto ra = std::to_chars(a, a + sizeof(a), e.gain);
        auto rb = std::to_chars(b, b + sizeof(b), e.normalized);
        os << name << ',' << std::string(a, ra.ptr) << ',' << std::string(b, rb.ptr)
           << '\n';
    }
    return os.str();
}

// Combined report: selected features with their statistics, the metrics
// table, and the top-N importance ranking (values only; any plotting tool
// can turn the normalized column into a bar chart).
inline nlohmann::json render_report_json(const SelectionTrace& trace,
                                         const EvalReport& eval,
                                         const ImportanceReport& imp,
                                         size_t top_n = 20) {
    std::unordered_set<std::string> universe;
    for (const auto& d : trace.decisions) universe.insert(d.name);
    for (const auto& e : imp.entries) {
        if (!universe.count(e.feature))
            throw DataError("render_report: feature '" + e.feature +
                            "' is not in the selection trace");
    }
    nlohmann::json selected = nlohmann::json::array();
    for (const auto& d : trace.decisions) {
        if (!d.in_a6) continue;
        auto opt = [](const std::optional<double>& v) {
            return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        selected.push_back({{"feature", d.name},
                            {"pearson", opt(d.pearson)},
                            {"spearman", opt(d.spearman)},
                            {"kendall", opt(d.kendall)},
                            {"info_gain", d.info_gain},
                            {"rule", d.rule}});
    }
    nlohmann::json top = nlohmann::json::array();
    for (size_t i = 0; i < imp.entries.size() && i < top_n; ++i) {
        const auto& e = imp.entries[i];
        top.push_back({{"feature", e.feature},
                       {"gain", e.gain},
                       {"normalized", e.normalized}});
    }
    nlohmann::json j = {
        {"schema_version", kSchemaVersion},
        {"selected_features", selected},
        {"metrics", eval_report_to_json(eval)},
        {"importance_top", top},
        {"model_type", imp.model_type},
    };
    if (imp.total_gain == 0.0) j["note"] = "no splits";
    return j;
}

inline std::string render_report_markdown(const SelectionTrace& trace,
                                          const EvalReport& eval,
                                          const ImportanceReport& imp,
                                          size_t top_n = 20) {
    const nlohmann::json j = render_report_json(trace, eval, imp, top_n);
    std::ostringstream os;
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    os << "# flowsieve report\n\n";
    os << "## Selected features (" << j["selected_features"].size() << " of "
       << trace.decisions.size() << ")\n\n";
    os << "| feature | pearson | spearman | kendall | info gain | rule |\n";
    os << "|---|---|---|---|---|---|\n";
    for (const auto& f : j["selected_features"]) {
        auto cell = [&](const nlohmann::json& v) {
            return v.is_null() ? std::string("n/a") : num(v.get<double>());
        };
        os << "| " << f["feature"].get<std::string>() << " | " << cell(f["pearson"])
           << " | " << cell(f["spearman"]) << " | " << cell(f["kendall"]) << " | "
           << cell(f["info_gain"]) << " | " << f["rule"].get<std::string>() << " |\n";
    }
    os << "\n## Metrics\n\n";
    os << "| metric | value |\n|---|---|\n";
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f %%", v * 100.0);
        return std::string(buf);
    };
    os << "| Accuracy | " << pct(eval.metrics.accuracy) << " |\n";
    os << "| Precision | " << pct(eval.metrics.precision_weighted) << " |\n";
    os << "| Recall | " << pct(eval.metrics.recall_weighted) << " |\n";
    os << "| F1-Score | " << pct(eval.metrics.f1_weighted) << " |\n";
    os << "| Mean Squared Error | " << num(eval.mse) << " |\n";
    if (eval.cv_fold_accuracies) {
        os << "| CV folds |";
        for (double a : *eval.cv_fold_accuracies) os << ' ' << pct(a);
        os << " |\n";
    }
    os << "\n## Feature importance (top " << top_n << ", " << imp.model_type
       << ", total gain " << num(imp.total_gain) << ")\n\n";
    if (imp.total_gain == 0.0) {
        os << "no splits\n";
    } else {
        os << "| rank | feature | gain | normalized |\n|---|---|---|---|\n";
        size_t rank = 1;
        for (const auto& e : j["importance_top"]) {
            os << "| " << rank++ << " | " << e["feature"].get<std::string>() << " | "
               << num(e["gain"].get<double>()) << " | "
               << num(e["normalized"].get<double>()) << " |\n";
        }
    }
    return os.str();
}

}  // namespace flowsieve
