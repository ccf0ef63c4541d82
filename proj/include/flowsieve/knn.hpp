#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"

namespace flowsieve {

// k-nearest-neighbors over Euclidean distance. Stores the training data
// verbatim. Distance ties resolve to the lower training-row index; an even
// vote split resolves to class 0.
struct KnnModel {
    std::vector<double> train_x;  // row-major copy of the training matrix
    std::vector<uint8_t> train_y;
    size_t n_rows = 0;
    size_t n_features = 0;
    size_t k = 5;
    std::vector<std::string> feature_names;
};

inline KnnModel train_knn(const Dataset& d, size_t k = 5,
                          std::vector<std::string>* warnings = nullptr) {
    if (d.n_rows == 0) throw TrainError("train_knn: empty dataset");
    if (!d.has_labels()) throw TrainError("train_knn: dataset has no labels");
    if (k == 0) throw TrainError("train_knn: k must be positive");
    if (k > d.n_rows)
        throw TrainError("train_knn: k = " + std::to_string(k) +
                         " exceeds training rows = " + std::to_string(d.n_rows));
    if (k % 2 == 0 && warnings)
        warnings->push_back("train_knn: even k can tie the vote; ties predict class 0");
    KnnModel m;
    m.train_x = d.x;
    m.train_y = d.y;
    m.n_rows = d.n_rows;
    m.n_features = d.n_features;
    m.k = k;
    m.feature_names = d.feature_names;
    return m;
}

// Fraction of the k nearest training labels equal to 1.
inline double knn_score(const KnnModel& m, std::span<const double> row) {
    std::vector<std::pair<double, size_t>> dist(m.n_rows);
    for (size_t r = 0; r < m.n_rows; ++r) {
        const double* t = m.train_x.data() + r * m.n_features;
        double d2 = 0.0;
        for (size_t j = 0; j < m.n_features; ++j) {
            const double diff = row[j] - t[j];
            d2 += diff * diff;
        }
        dist[r] = {d2, r};
    }
    auto by_distance_then_index = [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    };
    std::nth_element(dist.begin(),
                     dist.begin() + static_cast<std::ptrdiff_t>(m.k - 1), dist.end(),
                     by_distance_then_index);
    size_t votes = 0;
    for (size_t i = 0; i < m.k; ++i) votes += m.train_y[dist[i].second];
    return static_cast<double>(votes) / static_cast<double>(m.k);
}

}  // namespace flowsieve
