#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "flowsieve/error.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

// Cleaned numeric feature matrix plus binary labels. Invariants: X finite,
// y in {0,1} with one entry per row (or empty for unlabeled data), unique
// feature names. Every pipeline stage consumes and produces this.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<double> x;  // row-major, n_rows * n_features
    std::vector<uint8_t> y; // empty when unlabeled

    size_t n_rows = 0;
    size_t n_features = 0;

    double at(size_t row, size_t col) const { return x[row * n_features + col]; }
    double& at(size_t row, size_t col) { return x[row * n_features + col]; }

    std::span<const double> row(size_t r) const {
        return {x.data() + r * n_features, n_features};
    }

    bool has_labels() const { return !y.empty(); }

    std::vector<double> column(size_t c) const {
        std::vector<double> out(n_rows);
        for (size_t r = 0; r < n_rows; ++r) out[r] = at(r, c);
        return out;
    }

    std::pair<size_t, size_t> class_counts() const {
        size_t n0 = 0, n1 = 0;
        for (uint8_t v : y) (v ? n1 : n0)++;
        return {n0, n1};
    }

    bool both_classes_present() const {
        auto [n0, n1] = class_counts();
        return n0 > 0 && n1 > 0;
    }
};

inline void validate_dataset(const Dataset& d) {
    if (d.x.size() != d.n_rows * d.n_features)
        throw DataError("dataset matrix size does not match row/feature counts");
    if (d.feature_names.size() != d.n_features)
        throw DataError("dataset feature name count does not match matrix width");
    if (!d.y.empty() && d.y.size() != d.n_rows)
        throw DataError("dataset label count does not match row count");
    std::unordered_set<std::string> seen;
    for (const auto& name : d.feature_names) {
        if (!seen.insert(name).second)
            throw DataError("duplicate feature name: " + name);
    }
    for (double v : d.x) {
        if (!std::isfinite(v)) throw DataError("dataset contains a non-finite value");
    }
    for (uint8_t v : d.y) {
        if (v > 1) throw DataError("dataset labels must be 0 or 1");
    }
}

inline size_t feature_index(const Dataset& d, const std::string& name) {
    for (size_t j = 0; j < d.n_features; ++j) {
        if (d.feature_names[j] == name) return j;
    }
    throw DataError("unknown feature: " + name);
}

// Keeps the listed features, in the listed order. Labels pass through.
inline Dataset select_features(const Dataset& d, const std::vector<std::string>& names) {
    Dataset out;
    out.feature_names = names;
    out.n_rows = d.n_rows;
    out.n_features = names.size();
    out.y = d.y;
    std::vector<size_t> idx;
    idx.reserve(names.size());
    for (const auto& name : names) idx.push_back(feature_index(d, name));
    out.x.resize(out.n_rows * out.n_features);
    for (size_t r = 0; r < d.n_rows; ++r) {
        for (size_t j = 0; j < idx.size(); ++j) {
            out.x[r * out.n_features + j] = d.at(r, idx[j]);
        }
    }
    return out;
}

inline Dataset take_rows(const Dataset& d, const std::vector<size_t>& rows) {
    Dataset out;
    out.feature_names = d.feature_names;
    out.n_features = d.n_features;
    out.n_rows = rows.size();
    out.x.resize(out.n_rows * out.n_features);
    if (d.has_labels()) out.y.resize(out.n_rows);
    for (size_t i = 0; i < rows.size(); ++i) {
        std::memcpy(out.x.data() + i * out.n_features,
                    d.x.data() + rows[i] * d.n_features,
                    d.n_features * sizeof(double));
        if (d.has_labels()) out.y[i] = d.y[rows[i]];
    }
    return out;
}

// ---------------------------------------------------------------------------
// hashing (FNV-1a), used for config hashes and the scaler fit fingerprint
// ---------------------------------------------------------------------------

inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t fnv1a_str(const std::string& s, uint64_t h = 1469598103934665603ULL) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::string hash_hex(uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------------------
// on-disk container (.fsds): little-endian binary, versioned, self-describing
//
//   magic "FSDS" | u32 format version | u32 meta length | meta JSON bytes
//   u64 n_rows | u32 n_features | u8 has_labels
//   per feature: u32 name length | name bytes
//   X as f64 row-major | y as u8 per row (when labeled)
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) {
    const uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline void save_dataset(const Dataset& d, const std::string& path,
                         const nlohmann::json& meta = nlohmann::json::object()) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    os.write("FSDS", 4);
    detail::put_u32(os, static_cast<uint32_t>(kSchemaVersion));
    const std::string meta_str = meta.dump();
    detail::put_u32(os, static_cast<uint32_t>(meta_str.size()));
    os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    detail::put_u64(os, d.n_rows);
    detail::put_u32(os, static_cast<uint32_t>(d.n_features));
    os.put(d.has_labels() ? 1 : 0);
    for (const auto& name : d.feature_names) {
        detail::put_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    for (double v : d.x) detail::put_f64(os, v);
    if (d.has_labels()) {
        os.write(reinterpret_cast<const char*>(d.y.data()),
                 static_cast<std::streamsize>(d.y.size()));
    }
    if (!os) throw DataError("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path, nlohmann::json* meta_out = nullptr) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open dataset file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FSDS", 4) != 0)
        throw DataError("not a dataset file (bad magic): " + path);
    const uint32_t version = detail::get_u32(is);
    if (version != static_cast<uint32_t>(kSchemaVersion))
        throw DataError("unsupported dataset format version in " + path);
    const uint32_t meta_len = detail::get_u32(is);
    std::string meta_str(meta_len, '\0');
    is.read(meta_str.data(), meta_len);
    if (meta_out) *meta_out = nlohmann::json::parse(meta_str);
    Dataset d;
    d.n_rows = detail::get_u64(is);
    d.n_features = detail::get_u32(is);
    const bool has_labels = is.get() != 0;
    d.feature_names.resize(d.n_features);
    for (auto& name : d.feature_names) {
        const uint32_t len = detail::get_u32(is);
        name.resize(len);
        is.read(name.data(), len);
    }
    d.x.resize(d.n_rows * d.n_features);
    for (auto& v : d.x) v = detail::get_f64(is);
    if (has_labels) {
        d.y.resize(d.n_rows);
        is.read(reinterpret_cast<char*>(d.y.data()),
                static_cast<std::streamsize>(d.y.size()));
    }
    if (!is) throw DataError("truncated dataset file: " + path);
    validate_dataset(d);
    return d;
}

}  // namespace flowsieve
