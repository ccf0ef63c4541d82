#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/rng.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

// Synthetic flow-like data: informative features are class-conditional
// Gaussians N(0,1) vs N(separation,1), noise features are N(0,1) regardless
// of the label. With a single informative feature the Bayes error is
// Phi(-separation/2), e.g. about 0.13% at 6 sigma.
struct SynthSpec {
    size_t n_rows = 1000;
    size_t n_informative = 3;
    size_t n_noise = 5;
    double positive_fraction = 0.5;  // class-imbalance ratio
    double flip_rate = 0.0;          // label noise applied after generation
    double separation = 3.0;
    uint64_t seed = 0;

    void validate() const {
        if (n_rows < 10) throw ConfigError("synth: n_rows must be >= 10");
        if (n_informative + n_noise == 0)
            throw ConfigError("synth: need at least one feature");
        if (!(positive_fraction > 0.0 && positive_fraction < 1.0))
            throw ConfigError("synth: positive_fraction must be in (0, 1)");
        if (!(flip_rate >= 0.0 && flip_rate < 1.0))
            throw ConfigError("synth: flip_rate must be in [0, 1)");
        if (!(separation > 0.0)) throw ConfigError("synth: separation must be > 0");
    }
};

struct SynthResult {
    Dataset dataset;
    std::vector<std::string> informative_features;  // ground truth
};

inline SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const size_t n = spec.n_rows;
    auto n1 = static_cast<size_t>(
        std::llround(static_cast<double>(n) * spec.positive_fraction));
    if (n1 == 0) n1 = 1;
    if (n1 >= n) n1 = n - 1;

    // exact class counts, then shuffle the row order
    std::vector<uint8_t> truth(n, 0);
    for (size_t i = n - n1; i < n; ++i) truth[i] = 1;
    rng.shuffle(truth);

    SynthResult out;
    Dataset& d = out.dataset;
    d.n_rows = n;
    d.n_features = spec.n_informative + spec.n_noise;
    for (size_t j = 0; j < spec.n_informative; ++j) {
        d.feature_names.push_back("inf_" + std::to_string(j + 1));
        out.informative_features.push_back(d.feature_names.back());
    }
    for (size_t j = 0; j < spec.n_noise; ++j)
        d.feature_names.push_back("noise_" + std::to_string(j + 1));

    d.x.resize(n * d.n_features);
    for (size_t r = 0; r < n; ++r) {
        const double shift = truth[r] ? spec.separation : 0.0;
        for (size_t j = 0; j < spec.n_informative; ++j)
            d.at(r, j) = shift + rng.normal();
        for (size_t j = spec.n_informative; j < d.n_features; ++j)
            d.at(r, j) = rng.normal();
    }

    d.y = truth;
    if (spec.flip_rate > 0.0) {
        for (size_t r = 0; r < n; ++r) {
            if (rng.uniform() < spec.flip_rate) d.y[r] ^= 1;
        }
    }
    return out;
}

inline nlohmann::json synth_truth_to_json(const SynthSpec& spec,
                                          const SynthResult& result) {
    return {
        {"schema_version", kSchemaVersion},
        {"informative_features", result.informative_features},
        {"spec",
         {{"n_rows", spec.n_rows},
          {"n_informative", spec.n_informative},
          {"n_noise", spec.n_noise},
          {"positive_fraction", spec.positive_fraction},
          {"flip_rate", spec.flip_rate},
          {"separation", spec.separation},
          {"seed", spec.seed}}},
    };
}

}  // namespace flowsieve
