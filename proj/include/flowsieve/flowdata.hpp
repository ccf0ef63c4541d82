#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "flowsieve/csv.hpp"
#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"

namespace flowsieve {

// Maps raw label strings to the binary classes. Attack labels match exactly
// or by prefix (CIC IoT 2023 spells its attacks "DDoS-ICMP_Flood" etc).
struct LabelRule {
    std::vector<std::string> benign_labels;
    std::vector<std::string> attack_labels;
    std::vector<std::string> attack_prefixes;
    enum class UnknownPolicy { kDrop, kError } unknown_policy = UnknownPolicy::kDrop;

    bool is_benign(const std::string& label) const {
        return std::find(benign_labels.begin(), benign_labels.end(), label) !=
               benign_labels.end();
    }

    bool is_attack(const std::string& label) const {
        if (std::find(attack_labels.begin(), attack_labels.end(), label) !=
            attack_labels.end())
            return true;
        for (const auto& prefix : attack_prefixes) {
            if (label.rfind(prefix, 0) == 0) return true;
        }
        return false;
    }

    void validate() const {
        for (const auto& b : benign_labels) {
            if (is_attack(b))
                throw ConfigError("label rule maps '" + b + "' to both classes");
        }
    }
};

inline LabelRule cic_ids2017_rule() {
    LabelRule r;
    r.benign_labels = {"BENIGN"};
    r.attack_labels = {"DDoS"};
    r.unknown_policy = LabelRule::UnknownPolicy::kDrop;
    return r;
}

inline LabelRule cic_iot2023_rule() {
    LabelRule r;
    r.benign_labels = {"BenignTraffic"};
    r.attack_prefixes = {"DDoS-", "DoS-"};
    r.unknown_policy = LabelRule::UnknownPolicy::kDrop;
    return r;
}

inline LabelRule label_rule_from_json(const nlohmann::json& j) {
    LabelRule r;
    if (j.contains("benign")) r.benign_labels = j.at("benign").get<std::vector<std::string>>();
    if (j.contains("attack")) r.attack_labels = j.at("attack").get<std::vector<std::string>>();
    if (j.contains("attack_prefixes"))
        r.attack_prefixes = j.at("attack_prefixes").get<std::vector<std::string>>();
    if (j.contains("unknown_policy")) {
        const std::string p = j.at("unknown_policy").get<std::string>();
        if (p == "drop")
            r.unknown_policy = LabelRule::UnknownPolicy::kDrop;
        else if (p == "error")
            r.unknown_policy = LabelRule::UnknownPolicy::kError;
        else
            throw ConfigError("unknown_policy must be 'drop' or 'error', got '" + p + "'");
    }
    r.validate();
    return r;
}

inline nlohmann::json label_rule_to_json(const LabelRule& r) {
    return {
        {"benign", r.benign_labels},
        {"attack", r.attack_labels},
        {"attack_prefixes", r.attack_prefixes},
        {"unknown_policy",
         r.unknown_policy == LabelRule::UnknownPolicy::kDrop ? "drop" : "error"},
    };
}

struct CleanStats {
    size_t rows_in = 0;
    size_t rows_dropped = 0;
};

// Keeps exactly the rows whose numeric cells are all finite. NaN covers both
// unparsable spellings and missing cells; column structure and row order are
// unchanged, so the pass is idempotent.
inline RawTable clean(const RawTable& t, CleanStats* stats = nullptr) {
    std::vector<size_t> keep;
    keep.reserve(t.n_rows);
    for (size_t r = 0; r < t.n_rows; ++r) {
        bool ok = true;
        for (const auto& col : t.columns) {
            if (col.type == ColumnType::kNumeric && !std::isfinite(col.nums[r])) {
                ok = false;
                break;
            }
        }
        if (ok) keep.push_back(r);
    }
    RawTable out;
    out.n_rows = keep.size();
    out.columns.reserve(t.columns.size());
    for (const auto& col : t.columns) {
        Column c;
        c.name = col.name;
        c.type = col.type;
        if (col.type == ColumnType::kNumeric) {
            c.nums.reserve(keep.size());
            for (size_t r : keep) c.nums.push_back(col.nums[r]);
        } else {
            c.texts.reserve(keep.size());
            for (size_t r : keep) c.texts.push_back(col.texts[r]);
        }
        out.columns.push_back(std::move(c));
    }
    if (stats) {
        stats->rows_in = t.n_rows;
        stats->rows_dropped = t.n_rows - keep.size();
    }
    return out;
}

inline RawTable drop_columns(const RawTable& t, const std::vector<std::string>& names,
                             std::vector<std::string>* warnings = nullptr) {
    std::unordered_set<std::string> to_drop;
    for (const auto& name : names) {
        if (t.find(name)) {
            to_drop.insert(name);
        } else if (warnings) {
            warnings->push_back("drop_columns: no column named '" + name + "'");
        }
    }
    if (to_drop.size() == t.columns.size())
        throw DataError("drop_columns would remove every column");
    RawTable out;
    out.n_rows = t.n_rows;
    for (const auto& col : t.columns) {
        if (!to_drop.count(col.name)) out.columns.push_back(col);
    }
    return out;
}

struct BinarizeReport {
    size_t benign = 0;
    size_t attack = 0;
    size_t dropped_unknown = 0;
    std::vector<std::string> warnings;
};

// Turns the label column into y (0 benign, 1 DoS/DDoS) and the remaining
// numeric columns into X. Rows with unmapped labels are dropped or rejected
// per the rule's unknown policy. Requires cleaned input: a Dataset must not
// carry non-finite cells.
inline Dataset binarize_labels(const RawTable& t, const LabelRule& rule,
                               const std::string& label_column,
                               BinarizeReport* report = nullptr) {
    rule.validate();
    const Column* label_col = t.find(label_column);
    if (!label_col) throw DataError("label column '" + label_column + "' not found");
    if (label_col->type != ColumnType::kText)
        throw DataError("label column '" + label_column + "' is numeric, expected text");
    for (const auto& col : t.columns) {
        if (col.name == label_column) continue;
        if (col.type == ColumnType::kText)
            throw DataError("non-numeric feature column remains: '" + col.name +
                            "' (drop it before binarizing)");
    }

    BinarizeReport local;
    BinarizeReport& rep = report ? *report : local;

    std::vector<size_t> keep;
    std::vector<uint8_t> labels;
    keep.reserve(t.n_rows);
    labels.reserve(t.n_rows);
    for (size_t r = 0; r < t.n_rows; ++r) {
        const std::string& raw = label_col->texts[r];
        if (rule.is_benign(raw)) {
            keep.push_back(r);
            labels.push_back(0);
            ++rep.benign;
        } else if (rule.is_attack(raw)) {
            keep.push_back(r);
            labels.push_back(1);
            ++rep.attack;
        } else if (rule.unknown_policy == LabelRule::UnknownPolicy::kDrop) {
            ++rep.dropped_unknown;
        } else {
            throw DataError("row " + std::to_string(r) + " has unmapped label '" + raw +
                            "' and unknown_policy is 'error'");
        }
    }
    if (rep.benign == 0 && rep.attack == 0)
        throw DataError("no rows matched either class under the label rule");
    if (rep.benign == 0 || rep.attack == 0)
        rep.warnings.push_back(
            "single-class output: selection and training require both classes");

    Dataset d;
    for (const auto& col : t.columns) {
        if (col.name == label_column) continue;
        d.feature_names.push_back(col.name);
    }
    d.n_features = d.feature_names.size();
    d.n_rows = keep.size();
    d.x.resize(d.n_rows * d.n_features);
    size_t j = 0;
    for (const auto& col : t.columns) {
        if (col.name == label_column) continue;
        for (size_t i = 0; i < keep.size(); ++i) {
            const double v = col.nums[keep[i]];
            if (!std::isfinite(v))
                throw DataError("non-finite value in column '" + col.name +
                                "' (run clean before binarize)");
            d.x[i * d.n_features + j] = v;
        }
        ++j;
    }
    d.y = std::move(labels);
    return d;
}

// Appends tables with identical schemas (same column names and types, in
// order). Used by ingest when a dataset ships as several CSV files.
inline RawTable concat_tables(std::vector<RawTable> tables) {
    if (tables.empty()) throw DataError("concat_tables: no tables");
    RawTable out = std::move(tables.front());
    for (size_t i = 1; i < tables.size(); ++i) {
        RawTable& t = tables[i];
        if (t.columns.size() != out.columns.size())
            throw DataError("concat_tables: column count mismatch");
        for (size_t j = 0; j < out.columns.size(); ++j) {
            if (t.columns[j].name != out.columns[j].name)
                throw DataError("concat_tables: column name mismatch at index " +
                                std::to_string(j) + " ('" + t.columns[j].name +
                                "' vs '" + out.columns[j].name + "')");
            if (t.columns[j].type != out.columns[j].type)
                throw DataError("concat_tables: column type mismatch for '" +
                                out.columns[j].name + "'");
            auto& dst = out.columns[j];
            auto& src = t.columns[j];
            if (dst.type == ColumnType::kNumeric)
                dst.nums.insert(dst.nums.end(), src.nums.begin(), src.nums.end());
            else
                dst.texts.insert(dst.texts.end(), src.texts.begin(), src.texts.end());
        }
        out.n_rows += t.n_rows;
    }
    return out;
}

struct IngestReport {
    size_t rows_in = 0;
    size_t rows_dropped = 0;
    size_t benign = 0;
    size_t attack = 0;
    size_t dropped_unknown = 0;
    std::vector<std::string> warnings;
};

inline nlohmann::json ingest_report_to_json(const IngestReport& r) {
    return {
        {"schema_version", kSchemaVersion},
        {"rows_in", r.rows_in},
        {"rows_dropped", r.rows_dropped},
        {"per_class_counts", {{"benign", r.benign}, {"attack", r.attack},
                              {"dropped_unknown", r.dropped_unknown}}},
        {"warnings", r.warnings},
    };
}

}  // namespace flowsieve
