#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/rng.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

// Flat binary tree. Internal nodes route x[feature] <= threshold to left;
// feature == -1 marks a leaf. value is the class-1 fraction for
// classification trees and the leaf weight for boosted regression trees.
struct DecisionTree {
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
        double gain = 0.0;  // importance contribution of this split
    };
    std::vector<Node> nodes;

    bool empty() const { return nodes.empty(); }

    double score(std::span<const double> row) const {
        int i = 0;
        while (nodes[static_cast<size_t>(i)].feature >= 0) {
            const Node& n = nodes[static_cast<size_t>(i)];
            i = row[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<size_t>(i)].value;
    }

    int depth() const { return empty() ? 0 : depth_of(0); }

private:
    int depth_of(int i) const {
        const Node& n = nodes[static_cast<size_t>(i)];
        if (n.feature < 0) return 0;
        return 1 + std::max(depth_of(n.left), depth_of(n.right));
    }
};

struct TreeParams {
    int max_depth = 0;  // 0 = unlimited
    size_t min_samples_leaf = 1;
};

namespace treedetail {

// Gini split quality as the exact rational
//   S = (L0^2 + L1^2)/nL + (R0^2 + R1^2)/nR ,
// larger is purer. Minimizing weighted Gini impurity is equivalent to
// maximizing S. Keeping S as an integer fraction makes the documented
// tie-break (score, then feature index, then threshold) exact instead of
// subject to floating-point noise. 128-bit numerators keep the arithmetic
// exact up to ~30M rows per node.
struct GiniScore {
    unsigned __int128 num = 0;
    uint64_t den = 1;
};

inline GiniScore gini_score(uint64_t l0, uint64_t l1, uint64_t r0, uint64_t r1) {
    const uint64_t nl = l0 + l1;
    const uint64_t nr = r0 + r1;
    GiniScore s;
    s.num = static_cast<unsigned __int128>(l0 * l0 + l1 * l1) * nr +
            static_cast<unsigned __int128>(r0 * r0 + r1 * r1) * nl;
    s.den = nl * nr;
    return s;
}

inline bool purer(const GiniScore& a, const GiniScore& b) {
    return a.num * b.den > b.num * a.den;
}

struct CandidateSplit {
    int feature = -1;
    double threshold = 0.0;
    GiniScore score;
    size_t left_count = 0;
};

inline double gini_impurity(uint64_t c0, uint64_t c1) {
    const double n = static_cast<double>(c0 + c1);
    if (n == 0.0) return 0.0;
    const double p0 = static_cast<double>(c0) / n;
    const double p1 = static_cast<double>(c1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

class GiniTreeBuilder {
public:
    GiniTreeBuilder(const Dataset& d, const TreeParams& params, Rng* rng, size_t mtry)
        : d_(d), params_(params), rng_(rng), mtry_(mtry) {}

    DecisionTree build(std::vector<size_t> rows) {
        root_count_ = rows.size();
        tree_.nodes.clear();
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    // Returns the node index. Recurses left then right so feature-subsample
    // draws happen in a fixed order for a given seed.
    int grow(std::vector<size_t> rows, int depth) {
        uint64_t c0 = 0, c1 = 0;
        for (size_t r : rows) (d_.y[r] ? c1 : c0)++;

        const int index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[static_cast<size_t>(index)].value =
            static_cast<double>(c1) / static_cast<double>(rows.size());

        const bool depth_ok = params_.max_depth == 0 || depth < params_.max_depth;
        if (c0 == 0 || c1 == 0 || !depth_ok ||
            rows.size() < 2 * params_.min_samples_leaf) {
            return index;
        }

        const auto best = find_best_split(rows, c0, c1);
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

        // impurity decrease weighted by the fraction of samples at this node
        uint64_t l0 = 0, l1 = 0;
        for (size_t r : left_rows) (d_.y[r] ? l1 : l0)++;
        const double w = static_cast<double>(rows.size()) /
                         static_cast<double>(root_count_);
        const double nl = static_cast<double>(left_rows.size());
        const double nr = static_cast<double>(right_rows.size());
        const double nn = static_cast<double>(rows.size());
        const double decrease =
            gini_impurity(c0, c1) -
            (nl / nn) * gini_impurity(l0, l1) -
            (nr / nn) * gini_impurity(c0 - l0, c1 - l1);

        rows.clear();
        rows.shrink_to_fit();
        const int left = grow(std::move(left_rows), depth + 1);
        const int right = grow(std::move(right_rows), depth + 1);
        auto& node = tree_.nodes[static_cast<size_t>(index)];
        node.feature = best->feature;
        node.threshold = best->threshold;
        node.left = left;
        node.right = right;
        node.gain = w * decrease;
        return index;
    }

    std::vector<int> candidate_features() {
        const size_t p = d_.n_features;
        std::vector<int> features(p);
        for (size_t j = 0; j < p; ++j) features[j] = static_cast<int>(j);
        if (rng_ && mtry_ > 0 && mtry_ < p) {
            for (size_t i = 0; i < mtry_; ++i) {
                const size_t j = i + rng_->below(p - i);
                std::swap(features[i], features[j]);
            }
            features.resize(mtry_);
            std::sort(features.begin(), features.end());
        }
        return features;
    }

    std::optional<CandidateSplit> find_best_split(const std::vector<size_t>& rows,
                                                  uint64_t c0, uint64_t c1) {
        std::optional<CandidateSplit> best;
        std::vector<std::pair<double, uint8_t>> cells(rows.size());
        for (const int feature : candidate_features()) {
            for (size_t i = 0; i < rows.size(); ++i) {
                cells[i] = {d_.at(rows[i], static_cast<size_t>(feature)),
                            d_.y[rows[i]]};
            }
            std::sort(cells.begin(), cells.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            uint64_t l0 = 0, l1 = 0;
            for (size_t i = 0; i + 1 < cells.size(); ++i) {
                (cells[i].second ? l1 : l0)++;
                if (cells[i].first == cells[i + 1].first) continue;
                const size_t left_count = i + 1;
                if (left_count < params_.min_samples_leaf ||
                    cells.size() - left_count < params_.min_samples_leaf)
                    continue;
                const GiniScore s = gini_score(l0, l1, c0 - l0, c1 - l1);
                const double threshold = (cells[i].first + cells[i + 1].first) / 2.0;
                if (!best || purer(s, best->score)) {
                    best = CandidateSplit{feature, threshold, s, left_count};
                }
                // equal scores keep the earlier (lower feature, lower
                // threshold) candidate: enumeration order guarantees it
            }
        }
        // zero-gain splits are allowed (a mixed node splits whenever any
        // candidate exists); recursion still terminates because children are
        // strictly smaller
        return best;
    }

    const Dataset& d_;
    TreeParams params_;
    Rng* rng_;
    size_t mtry_;
    DecisionTree tree_;
    size_t root_count_ = 0;
};

inline nlohmann::json tree_nodes_to_json(const DecisionTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value},
                         {"gain", n.gain}});
    }
    return nodes;
}

inline DecisionTree tree_nodes_from_json(const nlohmann::json& j) {
    DecisionTree t;
    for (const auto& nj : j) {
        DecisionTree::Node n;
        n.feature = nj.at("feature").get<int>();
        n.threshold = nj.at("threshold").get<double>();
        n.left = nj.at("left").get<int>();
        n.right = nj.at("right").get<int>();
        n.value = nj.at("value").get<double>();
        n.gain = nj.at("gain").get<double>();
        t.nodes.push_back(n);
    }
    return t;
}

}  // namespace treedetail

// A trained CART classification tree.
struct TreeModel {
    DecisionTree tree;
    TreeParams params;
    std::vector<std::string> feature_names;
};

// Greedy CART on Gini impurity. Splits lie at midpoints of consecutive
// distinct sorted values; ties between equally good splits resolve to the
// lowest feature index, then the lowest threshold.
inline TreeModel train_tree(const Dataset& d, const TreeParams& params = {}) {
    if (d.n_rows == 0) throw TrainError("train_tree: empty dataset");
    if (!d.has_labels()) throw TrainError("train_tree: dataset has no labels");
    std::vector<size_t> rows(d.n_rows);
    for (size_t i = 0; i < d.n_rows; ++i) rows[i] = i;
    treedetail::GiniTreeBuilder builder(d, params, nullptr, 0);
    TreeModel m;
    m.tree = builder.build(std::move(rows));
    m.params = params;
    m.feature_names = d.feature_names;
    return m;
}

}  // namespace flowsieve
