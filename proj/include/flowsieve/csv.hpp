#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "flowsieve/error.hpp"

namespace flowsieve {

enum class ColumnType { kNumeric, kText };

// One column of a pre-cleaning table. Numeric columns store missing cells as
// NaN; the distinction does not matter downstream because clean() drops every
// non-finite cell anyway.
struct Column {
    std::string name;
    ColumnType type = ColumnType::kNumeric;
    std::vector<double> nums;
    std::vector<std::string> texts;

    size_t size() const {
        return type == ColumnType::kNumeric ? nums.size() : texts.size();
    }
};

struct RawTable {
    std::vector<Column> columns;
    size_t n_rows = 0;

    const Column* find(const std::string& name) const {
        for (const auto& c : columns)
            if (c.name == name) return &c;
        return nullptr;
    }
};

struct LoadReport {
    size_t rows = 0;
    std::vector<std::string> warnings;
};

using SchemaOverrides = std::map<std::string, ColumnType>;

namespace csvdetail {

inline std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

// Parses one numeric cell. Accepts the usual float grammar plus the spellings
// CIC exports actually contain: Infinity/inf/NaN (any case, optional sign)
// and the UTF-8 infinity sign. Empty means missing and parses as NaN.
inline bool parse_numeric(std::string_view raw, double& out) {
    std::string_view s = trim(raw);
    if (s.empty()) {
        out = std::numeric_limits<double>::quiet_NaN();
        return true;
    }
    bool negative = false;
    if (s.starts_with("\xE2\x88\x92")) {  // U+2212 minus sign
        negative = true;
        s.remove_prefix(3);
    } else if (s.starts_with("-")) {
        negative = true;
        s.remove_prefix(1);
    } else if (s.starts_with("+")) {
        s.remove_prefix(1);
    }
    if (s == "\xE2\x88\x9E") {  // U+221E infinity sign
        out = negative ? -std::numeric_limits<double>::infinity()
                       : std::numeric_limits<double>::infinity();
        return true;
    }
    if (s.empty()) return false;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ptr != s.data() + s.size()) return false;
    if (ec == std::errc::result_out_of_range) {
        // IEEE semantics for over/underflowing literals (e.g. 1e999)
        const std::string copy(s);
        v = std::strtod(copy.c_str(), nullptr);
    } else if (ec != std::errc()) {
        return false;
    }
    out = negative ? -v : v;
    return true;
}

// Incremental RFC-4180 reader: comma delimiter, double-quote escaping, fields
// may contain embedded newlines when quoted. Reports the physical line a
// record started on so ragged-row errors are actionable.
class CsvReader {
public:
    explicit CsvReader(std::istream& is, size_t start_line = 1)
        : is_(is), line_(start_line) {}

    size_t line() const { return line_; }

    // Returns false at end of input. Throws DataError on malformed quoting.
    bool next_record(std::vector<std::string>& fields, size_t& start_line) {
        fields.clear();
        int c = is_.get();
        if (c == EOF) return false;
        start_line = line_;
        std::string field;
        bool in_quotes = false;
        bool saw_any = false;
        for (;; c = is_.get()) {
            if (c == EOF) {
                if (in_quotes)
                    throw DataError("unterminated quoted field starting near line " +
                                    std::to_string(start_line));
                fields.push_back(std::move(field));
                return true;
            }
            saw_any = true;
            if (in_quotes) {
                if (c == '"') {
                    if (is_.peek() == '"') {
                        is_.get();
                        field.push_back('"');
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field.push_back(static_cast<char>(c));
                }
                continue;
            }
            switch (c) {
                case '"':
                    in_quotes = true;
                    break;
                case ',':
                    fields.push_back(std::move(field));
                    field.clear();
                    break;
                case '\r':
                    break;  // swallowed; record ends at \n
                case '\n':
                    ++line_;
                    fields.push_back(std::move(field));
                    return true;
                default:
                    field.push_back(static_cast<char>(c));
            }
        }
        (void)saw_any;
    }

private:
    std::istream& is_;
    size_t line_ = 1;
};

inline std::string dedup_header(const std::string& base,
                                std::unordered_set<std::string>& used,
                                size_t occurrence) {
    std::string candidate = base + "_" + std::to_string(occurrence);
    while (used.count(candidate)) candidate += "_dup";
    return candidate;
}

}  // namespace csvdetail

// Reads a CSV into a RawTable in two passes: pass 1 infers per-column types
// (numeric unless some non-missing cell fails to parse) and validates shape,
// pass 2 materializes only typed storage. Keeps per-pass memory bounded by a
// single record.
inline RawTable load_csv(const std::string& path,
                         const SchemaOverrides& overrides = {},
                         LoadReport* report = nullptr) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw DataError("cannot open CSV file: " + path);

    LoadReport local_report;
    LoadReport& rep = report ? *report : local_report;

    // header
    std::vector<std::string> header;
    size_t header_line = 0;
    size_t first_data_line = 2;
    {
        csvdetail::CsvReader reader(probe);
        std::vector<std::string> fields;
        if (!reader.next_record(fields, header_line))
            throw DataError("empty CSV file: " + path);
        first_data_line = reader.line();
        std::unordered_set<std::string> used;
        std::map<std::string, size_t> occurrences;
        for (auto& f : fields) {
            std::string name{csvdetail::trim(f)};
            const size_t n = ++occurrences[name];
            if (n > 1) {
                const std::string renamed = csvdetail::dedup_header(name, used, n);
                rep.warnings.push_back("duplicate header '" + name +
                                       "' renamed to '" + renamed + "'");
                name = renamed;
            }
            used.insert(name);
            header.push_back(std::move(name));
        }
    }
    const size_t n_cols = header.size();

    // pass 1: type inference + row count + ragged check
    std::vector<bool> numeric_ok(n_cols, true);
    size_t n_rows = 0;
    {
        csvdetail::CsvReader reader(probe, first_data_line);
        std::vector<std::string> fields;
        size_t line = 0;
        while (reader.next_record(fields, line)) {
            if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
            if (fields.size() != n_cols)
                throw DataError(path + ": line " + std::to_string(line) + " has " +
                                std::to_string(fields.size()) + " fields, expected " +
                                std::to_string(n_cols));
            for (size_t j = 0; j < n_cols; ++j) {
                if (!numeric_ok[j]) continue;
                double v;
                if (!csvdetail::parse_numeric(fields[j], v)) numeric_ok[j] = false;
            }
            ++n_rows;
        }
    }

    RawTable table;
    table.n_rows = n_rows;
    table.columns.resize(n_cols);
    for (size_t j = 0; j < n_cols; ++j) {
        auto& col = table.columns[j];
        col.name = header[j];
        col.type = numeric_ok[j] ? ColumnType::kNumeric : ColumnType::kText;
        if (auto it = overrides.find(col.name); it != overrides.end()) {
            if (it->second == ColumnType::kNumeric && !numeric_ok[j])
                throw DataError("column '" + col.name +
                                "' forced numeric but contains unparsable cells");
            col.type = it->second;
        }
        if (col.type == ColumnType::kNumeric)
            col.nums.reserve(n_rows);
        else
            col.texts.reserve(n_rows);
    }

    // pass 2: materialize
    {
        std::ifstream is(path, std::ios::binary);
        csvdetail::CsvReader reader(is);
        std::vector<std::string> fields;
        size_t line = 0;
        reader.next_record(fields, line);  // header
        while (reader.next_record(fields, line)) {
            if (fields.size() == 1 && fields[0].empty()) continue;
            for (size_t j = 0; j < n_cols; ++j) {
                auto& col = table.columns[j];
                if (col.type == ColumnType::kNumeric) {
                    double v;
                    csvdetail::parse_numeric(fields[j], v);
                    col.nums.push_back(v);
                } else {
                    col.texts.push_back(std::string(csvdetail::trim(fields[j])));
                }
            }
        }
    }
    rep.rows = n_rows;
    return table;
}

namespace csvdetail {

inline bool needs_quoting(std::string_view s) {
    return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

inline void write_field(std::ostream& os, std::string_view s) {
    if (!needs_quoting(s)) {
        os << s;
        return;
    }
    os << '"';
    for (char c : s) {
        if (c == '"') os << '"';
        os << c;
    }
    os << '"';
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace csvdetail

inline void write_csv(const RawTable& t, std::ostream& os) {
    for (size_t j = 0; j < t.columns.size(); ++j) {
        if (j) os << ',';
        csvdetail::write_field(os, t.columns[j].name);
    }
    os << '\n';
    for (size_t r = 0; r < t.n_rows; ++r) {
        for (size_t j = 0; j < t.columns.size(); ++j) {
            if (j) os << ',';
            const auto& col = t.columns[j];
            if (col.type == ColumnType::kNumeric)
                os << csvdetail::format_double(col.nums[r]);
            else
                csvdetail::write_field(os, col.texts[r]);
        }
        os << '\n';
    }
}

inline void write_csv(const RawTable& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    write_csv(t, os);
    if (!os) throw DataError("write failed: " + path);
}

}  // namespace flowsieve
