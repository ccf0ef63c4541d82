#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/parallel.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

// Z-score parameters. stddev is the population (1/n) form. fit_fingerprint
// identifies the dataset the params were fit on, so applying them to already
// transformed data can be flagged.
struct ScalerParams {
    std::vector<std::string> feature_names;
    std::vector<double> mean;
    std::vector<double> stddev;
    uint64_t fit_fingerprint = 0;
};

namespace scalingdetail {

struct ColumnMoments {
    double mean = 0.0;
    double stddev = 0.0;
};

// Two-pass mean/stddev per column, sequential within a column so the result
// does not depend on the thread count.
inline std::vector<ColumnMoments> column_moments(const Dataset& d) {
    std::vector<ColumnMoments> out(d.n_features);
    parallel_for(d.n_features, [&](size_t j) {
        double sum = 0.0;
        for (size_t r = 0; r < d.n_rows; ++r) sum += d.at(r, j);
        const double mean = sum / static_cast<double>(d.n_rows);
        double sq = 0.0;
        for (size_t r = 0; r < d.n_rows; ++r) {
            const double dv = d.at(r, j) - mean;
            sq += dv * dv;
        }
        out[j].mean = mean;
        out[j].stddev = std::sqrt(sq / static_cast<double>(d.n_rows));
    });
    return out;
}

inline uint64_t moments_fingerprint(const Dataset& d,
                                    const std::vector<ColumnMoments>& m) {
    uint64_t h = fnv1a(&d.n_rows, sizeof(d.n_rows));
    for (const auto& name : d.feature_names) h = fnv1a_str(name, h);
    for (const auto& cm : m) {
        h = fnv1a(&cm.mean, sizeof(double), h);
        h = fnv1a(&cm.stddev, sizeof(double), h);
    }
    return h;
}

}  // namespace scalingdetail

inline ScalerParams fit_scaler(const Dataset& d) {
    if (d.n_rows == 0) throw DataError("fit_scaler: empty dataset");
    const auto moments = scalingdetail::column_moments(d);
    ScalerParams p;
    p.feature_names = d.feature_names;
    p.mean.reserve(d.n_features);
    p.stddev.reserve(d.n_features);
    for (const auto& m : moments) {
        p.mean.push_back(m.mean);
        p.stddev.push_back(m.stddev);
    }
    p.fit_fingerprint = scalingdetail::moments_fingerprint(d, moments);
    return p;
}

// Applies (x - mean) / stddev per column. Zero-variance columns map to zero.
// Applying params to a dataset other than the one they were fit on (notably,
// an already scaled one) is legal but emits a warning via the fingerprint.
inline Dataset transform(const ScalerParams& p, const Dataset& d,
                         std::vector<std::string>* warnings = nullptr) {
    if (p.feature_names != d.feature_names)
        throw DataError("transform: scaler feature names do not match dataset");
    if (warnings && p.fit_fingerprint != 0) {
        const auto moments = scalingdetail::column_moments(d);
        if (scalingdetail::moments_fingerprint(d, moments) != p.fit_fingerprint)
            warnings->push_back(
                "transform: dataset differs from the one the scaler was fit on "
                "(double scaling?)");
    }
    Dataset out = d;
    parallel_for(d.n_features, [&](size_t j) {
        const double mean = p.mean[j];
        const double sd = p.stddev[j];
        if (sd == 0.0) {
            for (size_t r = 0; r < out.n_rows; ++r) out.at(r, j) = 0.0;
        } else {
            for (size_t r = 0; r < out.n_rows; ++r)
                out.at(r, j) = (out.at(r, j) - mean) / sd;
        }
    });
    return out;
}

inline nlohmann::json scaler_to_json(const ScalerParams& p) {
    nlohmann::json features = nlohmann::json::object();
    for (size_t j = 0; j < p.feature_names.size(); ++j) {
        features[p.feature_names[j]] = {{"mean", p.mean[j]}, {"std", p.stddev[j]}};
    }
    return {
        {"schema_version", kSchemaVersion},
        {"feature_order", p.feature_names},
        {"features", features},
        {"fit_fingerprint", hash_hex(p.fit_fingerprint)},
    };
}

inline ScalerParams scaler_from_json(const nlohmann::json& j) {
    ScalerParams p;
    p.feature_names = j.at("feature_order").get<std::vector<std::string>>();
    const auto& features = j.at("features");
    for (const auto& name : p.feature_names) {
        const auto& f = features.at(name);
        p.mean.push_back(f.at("mean").get<double>());
        p.stddev.push_back(f.at("std").get<double>());
    }
    if (j.contains("fit_fingerprint"))
        p.fit_fingerprint = std::stoull(j.at("fit_fingerprint").get<std::string>(),
                                        nullptr, 16);
    return p;
}

}  // namespace flowsieve
