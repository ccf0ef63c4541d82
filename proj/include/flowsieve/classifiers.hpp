#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/forest.hpp"
#include "flowsieve/gbdt.hpp"
#include "flowsieve/knn.hpp"
#include "flowsieve/parallel.hpp"
#include "flowsieve/tree.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

using ClassifierModel = std::variant<TreeModel, ForestModel, GbdtModel, KnnModel>;

struct Prediction {
    std::vector<uint8_t> labels;
    std::vector<double> scores;  // class-1 probabilities
};

inline std::string model_type(const ClassifierModel& m) {
    switch (m.index()) {
        case 0: return "tree";
        case 1: return "forest";
        case 2: return "gbdt";
        default: return "knn";
    }
}

inline const std::vector<std::string>& model_feature_names(const ClassifierModel& m) {
    return std::visit([](const auto& model) -> const std::vector<std::string>& {
        return model.feature_names;
    }, m);
}

// Uniform inference: scores are class-1 probabilities and labels are
// score >= 0.5, except k-NN where an exactly split vote goes to class 0.
inline Prediction predict(const ClassifierModel& m, const Dataset& d) {
    const size_t expected = model_feature_names(m).size();
    if (d.n_features != expected)
        throw DataError("predict: dataset has " + std::to_string(d.n_features) +
                        " features, model expects " + std::to_string(expected));
    Prediction out;
    out.labels.resize(d.n_rows);
    out.scores.resize(d.n_rows);

    const bool knn_ties_to_zero = std::holds_alternative<KnnModel>(m);
    parallel_for(d.n_rows, [&](size_t r) {
        const auto row = d.row(r);
        double score = 0.0;
        std::visit([&](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, TreeModel>) {
                score = model.tree.score(row);
            } else if constexpr (std::is_same_v<T, ForestModel>) {
                score = forest_score(model, row);
            } else if constexpr (std::is_same_v<T, GbdtModel>) {
                score = gbdt_score(model, row);
            } else {
                score = knn_score(model, row);
            }
        }, m);
        out.scores[r] = score;
        if (knn_ties_to_zero)
            out.labels[r] = score > 0.5 ? 1 : 0;
        else
            out.labels[r] = score >= 0.5 ? 1 : 0;
    });
    return out;
}

// ---------------------------------------------------------------------------
// model serialization: versioned JSON, bit-exact round trip
// ---------------------------------------------------------------------------

inline nlohmann::json model_to_json(const ClassifierModel& m) {
    nlohmann::json j = {
        {"schema_version", kSchemaVersion},
        {"model_type", model_type(m)},
        {"feature_names", model_feature_names(m)},
    };
    std::visit([&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, TreeModel>) {
            j["nodes"] = treedetail::tree_nodes_to_json(model.tree);
            j["params"] = {{"max_depth", model.params.max_depth},
                           {"min_samples_leaf", model.params.min_samples_leaf}};
        } else if constexpr (std::is_same_v<T, ForestModel>) {
            nlohmann::json trees = nlohmann::json::array();
            for (const auto& t : model.trees)
                trees.push_back(treedetail::tree_nodes_to_json(t));
            j["trees"] = trees;
            j["params"] = {{"n_trees", model.params.n_trees},
                           {"max_depth", model.params.max_depth},
                           {"min_samples_leaf", model.params.min_samples_leaf},
                           {"mtry", model.params.mtry},
                           {"bootstrap", model.params.bootstrap},
                           {"seed", model.params.seed}};
        } else if constexpr (std::is_same_v<T, GbdtModel>) {
            nlohmann::json trees = nlohmann::json::array();
            for (const auto& t : model.trees)
                trees.push_back(treedetail::tree_nodes_to_json(t));
            j["trees"] = trees;
            j["base_score"] = model.base_score;
            j["train_loss"] = model.train_loss;
            j["params"] = {{"rounds", model.params.rounds},
                           {"learning_rate", model.params.learning_rate},
                           {"max_depth", model.params.max_depth},
                           {"l2_lambda", model.params.l2_lambda},
                           {"min_samples_leaf", model.params.min_samples_leaf},
                           {"seed", model.params.seed}};
        } else {
            j["train_x"] = model.train_x;
            j["train_y"] = model.train_y;
            j["n_rows"] = model.n_rows;
            j["n_features"] = model.n_features;
            j["params"] = {{"k", model.k}};
        }
    }, m);
    return j;
}

inline ClassifierModel model_from_json(const nlohmann::json& j) {
    const std::string type = j.at("model_type").get<std::string>();
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    if (type == "tree") {
        TreeModel m;
        m.tree = treedetail::tree_nodes_from_json(j.at("nodes"));
        m.params.max_depth = j.at("params").at("max_depth").get<int>();
        m.params.min_samples_leaf = j.at("params").at("min_samples_leaf").get<size_t>();
        m.feature_names = names;
        return m;
    }
    if (type == "forest") {
        ForestModel m;
        for (const auto& tj : j.at("trees"))
            m.trees.push_back(treedetail::tree_nodes_from_json(tj));
        const auto& p = j.at("params");
        m.params.n_trees = p.at("n_trees").get<size_t>();
        m.params.max_depth = p.at("max_depth").get<int>();
        m.params.min_samples_leaf = p.at("min_samples_leaf").get<size_t>();
        m.params.mtry = p.at("mtry").get<size_t>();
        m.params.bootstrap = p.at("bootstrap").get<bool>();
        m.params.seed = p.at("seed").get<uint64_t>();
        m.feature_names = names;
        return m;
    }
    if (type == "gbdt") {
        GbdtModel m;
        for (const auto& tj : j.at("trees"))
            m.trees.push_back(treedetail::tree_nodes_from_json(tj));
        m.base_score = j.at("base_score").get<double>();
        m.train_loss = j.at("train_loss").get<std::vector<double>>();
        const auto& p = j.at("params");
        m.params.rounds = p.at("rounds").get<size_t>();
        m.params.learning_rate = p.at("learning_rate").get<double>();
        m.params.max_depth = p.at("max_depth").get<int>();
        m.params.l2_lambda = p.at("l2_lambda").get<double>();
        m.params.min_samples_leaf = p.at("min_samples_leaf").get<size_t>();
        m.params.seed = p.at("seed").get<uint64_t>();
        m.feature_names = names;
        return m;
    }
    if (type == "knn") {
        KnnModel m;
        m.train_x = j.at("train_x").get<std::vector<double>>();
        m.train_y = j.at("train_y").get<std::vector<uint8_t>>();
        m.n_rows = j.at("n_rows").get<size_t>();
        m.n_features = j.at("n_features").get<size_t>();
        m.k = j.at("params").at("k").get<size_t>();
        m.feature_names = names;
        return m;
    }
    throw DataError("unknown model_type: " + type);
}

// Trains the named model kind with JSON hyperparameters; unknown keys are
// rejected so config typos fail loudly.
inline ClassifierModel train_model(const std::string& kind, const Dataset& d,
                                   const nlohmann::json& params = nlohmann::json::object(),
                                   std::vector<std::string>* warnings = nullptr) {
    auto check_keys = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : params.items()) {
            (void)value;
            bool ok = false;
            for (const char* a : allowed)
                if (key == a) ok = true;
            if (!ok)
                throw ConfigError("unknown " + kind + " hyperparameter: " + key);
        }
    };
    if (kind == "tree") {
        check_keys({"max_depth", "min_samples_leaf"});
        TreeParams p;
        if (params.contains("max_depth")) p.max_depth = params.at("max_depth").get<int>();
        if (params.contains("min_samples_leaf"))
            p.min_samples_leaf = params.at("min_samples_leaf").get<size_t>();
        return train_tree(d, p);
    }
    if (kind == "forest") {
        check_keys({"n_trees", "max_depth", "min_samples_leaf", "mtry", "bootstrap", "seed"});
        ForestParams p;
        if (params.contains("n_trees")) p.n_trees = params.at("n_trees").get<size_t>();
        if (params.contains("max_depth")) p.max_depth = params.at("max_depth").get<int>();
        if (params.contains("min_samples_leaf"))
            p.min_samples_leaf = params.at("min_samples_leaf").get<size_t>();
        if (params.contains("mtry")) p.mtry = params.at("mtry").get<size_t>();
        if (params.contains("bootstrap")) p.bootstrap = params.at("bootstrap").get<bool>();
        if (params.contains("seed")) p.seed = params.at("seed").get<uint64_t>();
        return train_forest(d, p);
    }
    if (kind == "gbdt") {
        check_keys({"rounds", "learning_rate", "max_depth", "l2_lambda",
                    "min_samples_leaf", "seed"});
        GbdtParams p;
        if (params.contains("rounds")) p.rounds = params.at("rounds").get<size_t>();
        if (params.contains("learning_rate"))
            p.learning_rate = params.at("learning_rate").get<double>();
        if (params.contains("max_depth")) p.max_depth = params.at("max_depth").get<int>();
        if (params.contains("l2_lambda")) p.l2_lambda = params.at("l2_lambda").get<double>();
        if (params.contains("min_samples_leaf"))
            p.min_samples_leaf = params.at("min_samples_leaf").get<size_t>();
        if (params.contains("seed")) p.seed = params.at("seed").get<uint64_t>();
        return train_gbdt(d, p);
    }
    if (kind == "knn") {
        check_keys({"k"});
        size_t k = 5;
        if (params.contains("k")) k = params.at("k").get<size_t>();
        return train_knn(d, k, warnings);
    }
    throw ConfigError("unknown model kind: " + kind +
                      " (expected tree|forest|gbdt|knn)");
}

}  // namespace flowsieve
