#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/tree.hpp"

namespace flowsieve {

struct GbdtParams {
    size_t rounds = 100;
    double learning_rate = 0.3;
    int max_depth = 6;
    double l2_lambda = 1.0;
    size_t min_samples_leaf = 1;
    uint64_t seed = 0;  // reserved for stochastic variants; training is exact
};

// Additive ensemble of regression trees on the logistic loss.
// raw(x) = base_score + lr * sum of tree outputs; probability = sigmoid(raw).
struct GbdtModel {
    std::vector<DecisionTree> trees;
    GbdtParams params;
    double base_score = 0.0;  // logit of the class-1 prior
    std::vector<std::string> feature_names;
    std::vector<double> train_loss;  // log-loss after round i (index 0 = prior)
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace gbdtdetail {

inline double leaf_weight(double sum_g, double sum_h, double lambda) {
    return -sum_g / (sum_h + lambda);
}

// Newton gain of putting (g, h) mass into one leaf.
inline double leaf_objective(double sum_g, double sum_h, double lambda) {
    return sum_g * sum_g / (sum_h + lambda);
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    size_t left_count = 0;
};

class GradientTreeBuilder {
public:
    GradientTreeBuilder(const Dataset& d, const std::vector<double>& grad,
                        const std::vector<double>& hess, const GbdtParams& params)
        : d_(d), grad_(grad), hess_(hess), params_(params) {}

    DecisionTree build(std::vector<size_t> rows) {
        tree_.nodes.clear();
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<size_t> rows, int depth) {
        double sum_g = 0.0, sum_h = 0.0;
        for (size_t r : rows) {
            sum_g += grad_[r];
            sum_h += hess_[r];
        }
        const int index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[static_cast<size_t>(index)].value =
            leaf_weight(sum_g, sum_h, params_.l2_lambda);

        const bool depth_ok = params_.max_depth == 0 || depth < params_.max_depth;
        if (!depth_ok || rows.size() < 2 * params_.min_samples_leaf) return index;

        const auto best = find_best_split(rows, sum_g, sum_h);
        if (!best) return index;

        std::vector<size_t> left_rows, right_rows;
        left_rows.reserve(best->left_count);
        right_rows.reserve(rows.size() - best->left_count);
        for (size_t r : rows) {
            (d_.at(r, static_cast<size_t>(best->feature)) <= best->threshold
                 ? left_rows
                 : right_rows)
                .push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const double gain = best->gain;
        const int feature = best->feature;
        const double threshold = best->threshold;
        const int left = grow(std::move(left_rows), depth + 1);
        const int right = grow(std::move(right_rows), depth + 1);
        auto& node = tree_.nodes[static_cast<size_t>(index)];
        node.feature = feature;
        node.threshold = threshold;
        node.left = left;
        node.right = right;
        node.gain = gain;
        return index;
    }

    std::optional<SplitChoice> find_best_split(const std::vector<size_t>& rows,
                                               double sum_g, double sum_h) {
        const double lambda = params_.l2_lambda;
        const double parent_obj = leaf_objective(sum_g, sum_h, lambda);
        std::optional<SplitChoice> best;
        std::vector<std::pair<double, size_t>> cells(rows.size());
        for (size_t feature = 0; feature < d_.n_features; ++feature) {
            for (size_t i = 0; i < rows.size(); ++i) {
                cells[i] = {d_.at(rows[i], feature), rows[i]};
            }
            std::sort(cells.begin(), cells.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double gl = 0.0, hl = 0.0;
            for (size_t i = 0; i + 1 < cells.size(); ++i) {
                gl += grad_[cells[i].second];
                hl += hess_[cells[i].second];
                if (cells[i].first == cells[i + 1].first) continue;
                const size_t left_count = i + 1;
                if (left_count < params_.min_samples_leaf ||
                    cells.size() - left_count < params_.min_samples_leaf)
                    continue;
                const double gain = 0.5 * (leaf_objective(gl, hl, lambda) +
                                           leaf_objective(sum_g - gl, sum_h - hl, lambda) -
                                           parent_obj);
                if (gain <= 0.0) continue;
                if (!best || gain > best->gain) {
                    best = SplitChoice{static_cast<int>(feature),
                                       (cells[i].first + cells[i + 1].first) / 2.0,
                                       gain, left_count};
                }
            }
        }
        return best;
    }

    const Dataset& d_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    GbdtParams params_;
    DecisionTree tree_;
};

inline double log_loss(const std::vector<double>& raw, const std::vector<uint8_t>& y) {
    double total = 0.0;
    for (size_t i = 0; i < raw.size(); ++i) {
        const double p = std::clamp(sigmoid(raw[i]), 1e-15, 1.0 - 1e-15);
        total += y[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(raw.size());
}

}  // namespace gbdtdetail

// Second-order boosting: each round fits a regression tree to the gradients
// g_i = p_i - y_i and hessians h_i = p_i (1 - p_i), with leaf weights
// -sum(g)/(sum(h) + lambda) and the usual split gain
// 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)].
inline GbdtModel train_gbdt(const Dataset& d, const GbdtParams& params = {}) {
    if (d.n_rows == 0) throw TrainError("train_gbdt: empty dataset");
    if (!d.has_labels() || !d.both_classes_present())
        throw TrainError("train_gbdt: both classes must be present");

    GbdtModel m;
    m.params = params;
    m.feature_names = d.feature_names;

    const auto [n0, n1] = d.class_counts();
    const double prior =
        static_cast<double>(n1) / static_cast<double>(d.n_rows);
    m.base_score = std::log(prior / (1.0 - prior));

    std::vector<double> raw(d.n_rows, m.base_score);
    std::vector<double> grad(d.n_rows), hess(d.n_rows);
    m.train_loss.push_back(gbdtdetail::log_loss(raw, d.y));

    std::vector<size_t> all_rows(d.n_rows);
    for (size_t i = 0; i < d.n_rows; ++i) all_rows[i] = i;

    for (size_t round = 0; round < params.rounds; ++round) {
        for (size_t i = 0; i < d.n_rows; ++i) {
            const double p = sigmoid(raw[i]);
            grad[i] = p - static_cast<double>(d.y[i]);
            hess[i] = p * (1.0 - p);
        }
        gbdtdetail::GradientTreeBuilder builder(d, grad, hess, params);
        DecisionTree tree = builder.build(all_rows);
        for (size_t i = 0; i < d.n_rows; ++i) {
            raw[i] += params.learning_rate * tree.score(d.row(i));
        }
        m.trees.push_back(std::move(tree));
        m.train_loss.push_back(gbdtdetail::log_loss(raw, d.y));
        if (m.train_loss[round + 1] > m.train_loss[round] + 1e-9)
            throw TrainError("train_gbdt: training loss increased at round " +
                             std::to_string(round + 1));
    }
    return m;
}

inline double gbdt_raw_score(const GbdtModel& m, std::span<const double> row) {
    double raw = m.base_score;
    for (const auto& tree : m.trees) raw += m.params.learning_rate * tree.score(row);
    return raw;
}

inline double gbdt_score(const GbdtModel& m, std::span<const double> row) {
    return sigmoid(gbdt_raw_score(m, row));
}

}  // namespace flowsieve
