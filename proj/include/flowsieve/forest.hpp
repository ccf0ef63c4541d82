#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/parallel.hpp"
#include "flowsieve/rng.hpp"
#include "flowsieve/tree.hpp"

namespace flowsieve {

struct ForestParams {
    size_t n_trees = 100;
    int max_depth = 0;          // 0 = unlimited
    size_t min_samples_leaf = 1;
    size_t mtry = 0;            // features per split; 0 = floor(sqrt(p))
    bool bootstrap = true;
    uint64_t seed = 0;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    ForestParams params;
    std::vector<std::string> feature_names;
};

// Bagged Gini trees with per-split feature subsampling. Each tree draws from
// its own generator seeded by (seed, tree index), so training parallelizes
// across trees without changing the result.
inline ForestModel train_forest(const Dataset& d, const ForestParams& params = {}) {
    if (d.n_rows == 0) throw TrainError("train_forest: empty dataset");
    if (!d.has_labels() || !d.both_classes_present())
        throw TrainError("train_forest: both classes must be present");
    if (params.n_trees == 0) throw TrainError("train_forest: n_trees must be >= 1");

    size_t mtry = params.mtry;
    if (mtry == 0)
        mtry = static_cast<size_t>(std::sqrt(static_cast<double>(d.n_features)));
    if (mtry == 0) mtry = 1;
    if (mtry > d.n_features) mtry = d.n_features;

    ForestModel m;
    m.params = params;
    m.params.mtry = mtry;
    m.feature_names = d.feature_names;
    m.trees.resize(params.n_trees);

    TreeParams tree_params;
    tree_params.max_depth = params.max_depth;
    tree_params.min_samples_leaf = params.min_samples_leaf;

    parallel_for(params.n_trees, [&](size_t t) {
        Rng rng(derive_seed(params.seed, t));
        std::vector<size_t> rows(d.n_rows);
        if (params.bootstrap) {
            for (auto& r : rows) r = rng.below(d.n_rows);
        } else {
            for (size_t i = 0; i < d.n_rows; ++i) rows[i] = i;
        }
        treedetail::GiniTreeBuilder builder(d, tree_params, &rng,
                                            mtry < d.n_features ? mtry : 0);
        m.trees[t] = builder.build(std::move(rows));
    });
    return m;
}

// Majority vote; the score is the fraction of trees voting for class 1.
inline double forest_score(const ForestModel& m, std::span<const double> row) {
    size_t votes = 0;
    for (const auto& tree : m.trees) {
        if (tree.score(row) >= 0.5) ++votes;
    }
    return static_cast<double>(votes) / static_cast<double>(m.trees.size());
}

}  // namespace flowsieve
