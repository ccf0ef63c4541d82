#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/stats.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

// Threshold behavior of the three selection steps. The defaults follow the
// algorithm's wording: steps 1 and 2 admit at "greater than or equal to" the
// mean of the matching sign, step 3 admits strictly above the mean.
struct SelectionConfig {
    int bins = 10;
    bool inclusive_positive = true;
    bool inclusive_negative = true;
    bool ig_strict = true;
};

// Full audit trail of a selection run: the six feature sets, every mean
// threshold (absent when its defining subset is empty), and the rule that
// decided each feature. Sets keep the original feature order.
struct SelectionTrace {
    std::vector<std::string> a1, a2, a3, a4, a5, a6;

    std::optional<double> mu_pearson_pos, mu_pearson_neg;
    std::optional<double> mu_spearman_pos, mu_spearman_neg;
    std::optional<double> mu_kendall_pos, mu_kendall_neg;
    std::optional<double> mu_sk_pos, mu_sk_neg;
    double mu_ig = 0.0;

    struct FeatureDecision {
        std::string name;
        std::optional<double> pearson, spearman, kendall, sk_avg;
        double info_gain = 0.0;
        std::string rule;  // first rule that admitted or rejected the feature
        bool in_a1 = false, in_a3 = false, in_a5 = false, in_a6 = false;
    };
    std::vector<FeatureDecision> decisions;

    const std::vector<std::string>& selected() const { return a6; }
};

namespace selectdetail {

inline std::optional<double> mean_of_sign(const std::vector<double>& values,
                                          bool positive) {
    double sum = 0.0;
    size_t count = 0;
    for (double v : values) {
        if (positive ? v > 0.0 : v < 0.0) {
            sum += v;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

inline bool admits_positive(double v, const std::optional<double>& mu, bool inclusive) {
    if (!mu) return false;
    return inclusive ? v >= *mu : v > *mu;
}

inline bool admits_negative(double v, const std::optional<double>& mu, bool inclusive) {
    if (!mu) return false;
    return inclusive ? v <= *mu : v < *mu;
}

}  // namespace selectdetail

struct Step1Result {
    std::vector<std::string> a1, a2;
    std::optional<double> mu_pos, mu_neg;
};

// Step 1: Pearson pass over all features. Means are taken over the strictly
// positive / strictly negative Pearson values; a feature joins a1 when its
// value is positive and at least the positive mean, or negative and at most
// the negative mean. Zero and undefined values are neither, and go to a2.
inline Step1Result step1_pearson(const CorrelationTable& table,
                                 const SelectionConfig& cfg = {}) {
    if (table.rows.empty()) throw DataError("step1_pearson: empty table");
    std::vector<double> defined;
    for (const auto& r : table.rows)
        if (r.pearson) defined.push_back(*r.pearson);
    Step1Result out;
    out.mu_pos = selectdetail::mean_of_sign(defined, true);
    out.mu_neg = selectdetail::mean_of_sign(defined, false);
    for (const auto& r : table.rows) {
        bool selected = false;
        if (r.pearson) {
            const double p = *r.pearson;
            if (p > 0.0)
                selected = selectdetail::admits_positive(p, out.mu_pos,
                                                         cfg.inclusive_positive);
            else if (p < 0.0)
                selected = selectdetail::admits_negative(p, out.mu_neg,
                                                         cfg.inclusive_negative);
        }
        (selected ? out.a1 : out.a2).push_back(r.name);
    }
    return out;
}

struct Step2Result {
    std::vector<std::string> a3;
    std::optional<double> mu_spearman_pos, mu_spearman_neg;
    std::optional<double> mu_kendall_pos, mu_kendall_neg;
    std::optional<double> mu_sk_pos, mu_sk_neg;
};

// Step 2: rank-correlation rescue of the features Pearson rejected. The four
// component means are computed over a2's features only; the combined
// thresholds are the averages of the Spearman and Kendall means, and each
// feature is judged by the average of its own two rank statistics.
inline Step2Result step2_rank_rescue(const CorrelationTable& table,
                                     const std::vector<std::string>& a2,
                                     const SelectionConfig& cfg = {}) {
    std::unordered_set<std::string> members(a2.begin(), a2.end());
    std::vector<double> spearman_vals, kendall_vals;
    for (const auto& r : table.rows) {
        if (!members.count(r.name)) continue;
        if (r.spearman) spearman_vals.push_back(*r.spearman);
        if (r.kendall) kendall_vals.push_back(*r.kendall);
    }
    Step2Result out;
    out.mu_spearman_pos = selectdetail::mean_of_sign(spearman_vals, true);
    out.mu_spearman_neg = selectdetail::mean_of_sign(spearman_vals, false);
    out.mu_kendall_pos = selectdetail::mean_of_sign(kendall_vals, true);
    out.mu_kendall_neg = selectdetail::mean_of_sign(kendall_vals, false);
    if (out.mu_spearman_pos && out.mu_kendall_pos)
        out.mu_sk_pos = (*out.mu_kendall_pos + *out.mu_spearman_pos) / 2.0;
    if (out.mu_spearman_neg && out.mu_kendall_neg)
        out.mu_sk_neg = (*out.mu_kendall_neg + *out.mu_spearman_neg) / 2.0;

    for (const auto& r : table.rows) {
        if (!members.count(r.name)) continue;
        if (!r.spearman || !r.kendall) continue;
        const double s = (*r.spearman + *r.kendall) / 2.0;
        bool selected = false;
        if (s > 0.0)
            selected = selectdetail::admits_positive(s, out.mu_sk_pos,
                                                     cfg.inclusive_positive);
        else if (s < 0.0)
            selected = selectdetail::admits_negative(s, out.mu_sk_neg,
                                                     cfg.inclusive_negative);
        if (selected) out.a3.push_back(r.name);
    }
    return out;
}

struct Step3Result {
    std::vector<std::string> a5;
    double mu_ig = 0.0;
};

// Step 3: information gain over all original features; admits features whose
// gain is above the mean (strictly, by default).
inline Step3Result step3_infogain(const CorrelationTable& table,
                                  const SelectionConfig& cfg = {}) {
    if (table.rows.empty()) throw DataError("step3_infogain: empty table");
    Step3Result out;
    double sum = 0.0;
    for (const auto& r : table.rows) sum += r.info_gain;
    out.mu_ig = sum / static_cast<double>(table.rows.size());
    for (const auto& r : table.rows) {
        const bool selected =
            cfg.ig_strict ? r.info_gain > out.mu_ig : r.info_gain >= out.mu_ig;
        if (selected) out.a5.push_back(r.name);
    }
    return out;
}

// Runs the full three-step selection from a precomputed correlation table.
inline SelectionTrace select_from_table(const CorrelationTable& table,
                                        const SelectionConfig& cfg = {}) {
    const auto s1 = step1_pearson(table, cfg);
    const auto s2 = step2_rank_rescue(table, s1.a2, cfg);
    const auto s3 = step3_infogain(table, cfg);

    SelectionTrace trace;
    trace.a1 = s1.a1;
    trace.a2 = s1.a2;
    trace.a3 = s2.a3;
    trace.a5 = s3.a5;
    trace.mu_pearson_pos = s1.mu_pos;
    trace.mu_pearson_neg = s1.mu_neg;
    trace.mu_spearman_pos = s2.mu_spearman_pos;
    trace.mu_spearman_neg = s2.mu_spearman_neg;
    trace.mu_kendall_pos = s2.mu_kendall_pos;
    trace.mu_kendall_neg = s2.mu_kendall_neg;
    trace.mu_sk_pos = s2.mu_sk_pos;
    trace.mu_sk_neg = s2.mu_sk_neg;
    trace.mu_ig = s3.mu_ig;

    std::unordered_set<std::string> in_a1(s1.a1.begin(), s1.a1.end());
    std::unordered_set<std::string> in_a3(s2.a3.begin(), s2.a3.end());
    std::unordered_set<std::string> in_a5(s3.a5.begin(), s3.a5.end());

    // unions and intersections keep original feature order
    for (const auto& r : table.rows) {
        if (in_a1.count(r.name) || in_a3.count(r.name)) trace.a4.push_back(r.name);
    }
    std::unordered_set<std::string> in_a4(trace.a4.begin(), trace.a4.end());
    for (const auto& r : table.rows) {
        if (in_a4.count(r.name) && in_a5.count(r.name)) trace.a6.push_back(r.name);
    }
    std::unordered_set<std::string> in_a6(trace.a6.begin(), trace.a6.end());

    trace.decisions.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        SelectionTrace::FeatureDecision d;
        d.name = r.name;
        d.pearson = r.pearson;
        d.spearman = r.spearman;
        d.kendall = r.kendall;
        if (r.spearman && r.kendall) d.sk_avg = (*r.spearman + *r.kendall) / 2.0;
        d.info_gain = r.info_gain;
        d.in_a1 = in_a1.count(r.name) > 0;
        d.in_a3 = in_a3.count(r.name) > 0;
        d.in_a5 = in_a5.count(r.name) > 0;
        d.in_a6 = in_a6.count(r.name) > 0;
        if (d.in_a1) {
            d.rule = *r.pearson > 0.0 ? "step1:pearson-positive" : "step1:pearson-negative";
        } else if (d.in_a3) {
            d.rule = *d.sk_avg > 0.0 ? "step2:rescued-positive" : "step2:rescued-negative";
        } else if (!r.pearson) {
            d.rule = "step1:pearson-undefined";
        } else {
            d.rule = "step2:rejected";
        }
        trace.decisions.push_back(std::move(d));
    }
    return trace;
}

// The full hybrid selection: correlation table, Pearson pass, rank rescue,
// a4 = a1 union a3, information-gain pass, a6 = a4 intersect a5.
inline SelectionTrace select(const Dataset& d, const SelectionConfig& cfg = {}) {
    if (d.n_features < 1) throw DataError("select: dataset has no features");
    if (!d.has_labels() || !d.both_classes_present())
        throw DataError("select: both classes must be present");
    return select_from_table(correlation_table(d, cfg.bins), cfg);
}

inline nlohmann::json trace_to_json(const SelectionTrace& t,
                                    const SelectionConfig& cfg = {}) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& d : t.decisions) {
        decisions.push_back({{"feature", d.name},
                             {"pearson", opt(d.pearson)},
                             {"spearman", opt(d.spearman)},
                             {"kendall", opt(d.kendall)},
                             {"spearman_kendall_avg", opt(d.sk_avg)},
                             {"info_gain", d.info_gain},
                             {"rule", d.rule},
                             {"in_a1", d.in_a1},
                             {"in_a3", d.in_a3},
                             {"in_a5", d.in_a5},
                             {"selected", d.in_a6}});
    }
    return {
        {"schema_version", kSchemaVersion},
        {"config",
         {{"bins", cfg.bins},
          {"inclusive_positive", cfg.inclusive_positive},
          {"inclusive_negative", cfg.inclusive_negative},
          {"ig_strict", cfg.ig_strict}}},
        {"sets",
         {{"a1", t.a1}, {"a2", t.a2}, {"a3", t.a3}, {"a4", t.a4}, {"a5", t.a5},
          {"a6", t.a6}}},
        {"thresholds",
         {{"mu_pearson_positive", opt(t.mu_pearson_pos)},
          {"mu_pearson_negative", opt(t.mu_pearson_neg)},
          {"mu_spearman_positive", opt(t.mu_spearman_pos)},
          {"mu_spearman_negative", opt(t.mu_spearman_neg)},
          {"mu_kendall_positive", opt(t.mu_kendall_pos)},
          {"mu_kendall_negative", opt(t.mu_kendall_neg)},
          {"mu_spearman_kendall_positive", opt(t.mu_sk_pos)},
          {"mu_spearman_kendall_negative", opt(t.mu_sk_neg)},
          {"mu_information_gain", t.mu_ig}}},
        {"selected", t.a6},
        {"decisions", decisions},
    };
}

inline SelectionTrace trace_from_json(const nlohmann::json& j) {
    SelectionTrace t;
    const auto& sets = j.at("sets");
    t.a1 = sets.at("a1").get<std::vector<std::string>>();
    t.a2 = sets.at("a2").get<std::vector<std::string>>();
    t.a3 = sets.at("a3").get<std::vector<std::string>>();
    t.a4 = sets.at("a4").get<std::vector<std::string>>();
    t.a5 = sets.at("a5").get<std::vector<std::string>>();
    t.a6 = sets.at("a6").get<std::vector<std::string>>();
    auto opt = [](const nlohmann::json& v) -> std::optional<double> {
        if (v.is_null()) return std::nullopt;
        return v.get<double>();
    };
    const auto& th = j.at("thresholds");
    t.mu_pearson_pos = opt(th.at("mu_pearson_positive"));
    t.mu_pearson_neg = opt(th.at("mu_pearson_negative"));
    t.mu_spearman_pos = opt(th.at("mu_spearman_positive"));
    t.mu_spearman_neg = opt(th.at("mu_spearman_negative"));
    t.mu_kendall_pos = opt(th.at("mu_kendall_positive"));
    t.mu_kendall_neg = opt(th.at("mu_kendall_negative"));
    t.mu_sk_pos = opt(th.at("mu_spearman_kendall_positive"));
    t.mu_sk_neg = opt(th.at("mu_spearman_kendall_negative"));
    t.mu_ig = th.at("mu_information_gain").get<double>();
    if (j.contains("decisions")) {
        for (const auto& dj : j.at("decisions")) {
            SelectionTrace::FeatureDecision d;
            d.name = dj.at("feature").get<std::string>();
            d.pearson = opt(dj.at("pearson"));
            d.spearman = opt(dj.at("spearman"));
            d.kendall = opt(dj.at("kendall"));
            d.sk_avg = opt(dj.at("spearman_kendall_avg"));
            d.info_gain = dj.at("info_gain").get<double>();
            d.rule = dj.at("rule").get<std::string>();
            d.in_a1 = dj.at("in_a1").get<bool>();
            d.in_a3 = dj.at("in_a3").get<bool>();
            d.in_a5 = dj.at("in_a5").get<bool>();
            d.in_a6 = dj.at("selected").get<bool>();
            t.decisions.push_back(std::move(d));
        }
    }
    return t;
}

}  // namespace flowsieve
