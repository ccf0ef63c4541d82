#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/parallel.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

namespace statsdetail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("vector length mismatch: " +
                                    std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()));
    if (x.size() < 2) throw std::invalid_argument("need at least 2 observations");
}

inline double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace statsdetail

// Pearson r via single-pass co-moment updates (Welford form). Undefined when
// either vector has zero variance.
inline std::optional<double> pearson(std::span<const double> x,
                                     std::span<const double> y) {
    statsdetail::check_pair(x, y);
    double mean_x = 0.0, mean_y = 0.0;
    double m2x = 0.0, m2y = 0.0, comoment = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double dx = x[i] - mean_x;
        mean_x += dx / n;
        m2x += dx * (x[i] - mean_x);
        const double dy = y[i] - mean_y;
        mean_y += dy / n;
        m2y += dy * (y[i] - mean_y);
        comoment += dx * (y[i] - mean_y);
    }
    if (m2x == 0.0 || m2y == 0.0) return std::nullopt;
    return statsdetail::clamp_unit(comoment / std::sqrt(m2x * m2y));
}

// Fractional ranks, 1-based; tied values share the average of their ranks.
inline std::vector<double> fractional_ranks(std::span<const double> x) {
    const size_t n = x.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline std::optional<double> spearman(std::span<const double> x,
                                      std::span<const double> y) {
    statsdetail::check_pair(x, y);
    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    return pearson(rx, ry);
}

namespace statsdetail {

// Counts pairs swapped by sorting `v` ascending (equal keys are not swaps),
// via bottom-up merge sort. This is the discordant-pair count for a sequence
// already ordered by the other variable.
inline uint64_t merge_count_swaps(std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<double> buf(n);
    uint64_t swaps = 0;
    for (size_t width = 1; width < n; width *= 2) {
        for (size_t lo = 0; lo + width < n; lo += 2 * width) {
            const size_t mid = lo + width;
            const size_t hi = std::min(lo + 2 * width, n);
            size_t a = lo, b = mid, out = lo;
            while (a < mid && b < hi) {
                if (v[b] < v[a]) {
                    swaps += mid - a;
                    buf[out++] = v[b++];
                } else {
                    buf[out++] = v[a++];
                }
            }
            while (a < mid) buf[out++] = v[a++];
            while (b < hi) buf[out++] = v[b++];
            std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                      buf.begin() + static_cast<std::ptrdiff_t>(hi),
                      v.begin() + static_cast<std::ptrdiff_t>(lo));
        }
    }
    return swaps;
}

inline uint64_t tie_pairs(std::span<const double> sorted) {
    uint64_t pairs = 0;
    size_t i = 0;
    while (i < sorted.size()) {
        size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const uint64_t run = j - i + 1;
        pairs += run * (run - 1) / 2;
        i = j + 1;
    }
    return pairs;
}

}  // namespace statsdetail

// Kendall tau-b by Knight's O(n log n) method: sort by (x, y), count ties in
// x and joint ties, count exchanges needed to sort y, count ties in y.
// Matches the O(n^2) concordant/discordant definition exactly.
inline std::optional<double> kendall_tau_b(std::span<const double> x,
                                           std::span<const double> y) {
    statsdetail::check_pair(x, y);
    const size_t n = x.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    const uint64_t total_pairs = static_cast<uint64_t>(n) * (n - 1) / 2;

    uint64_t ties_x = 0, ties_xy = 0;
    {
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
            const uint64_t run = j - i + 1;
            ties_x += run * (run - 1) / 2;
            size_t a = i;
            while (a <= j) {
                size_t b = a;
                while (b + 1 <= j && y[order[b + 1]] == y[order[a]]) ++b;
                const uint64_t jr = b - a + 1;
                ties_xy += jr * (jr - 1) / 2;
                a = b + 1;
            }
            i = j + 1;
        }
    }

    std::vector<double> y_by_x(n);
    for (size_t i = 0; i < n; ++i) y_by_x[i] = y[order[i]];
    const uint64_t swaps = statsdetail::merge_count_swaps(y_by_x);
    // y_by_x is now sorted; reuse it for the y tie count
    const uint64_t ties_y = statsdetail::tie_pairs(y_by_x);

    if (ties_x == total_pairs || ties_y == total_pairs) return std::nullopt;

    const int64_t numerator =
        static_cast<int64_t>(total_pairs) - static_cast<int64_t>(ties_x) -
        static_cast<int64_t>(ties_y) + static_cast<int64_t>(ties_xy) -
        2 * static_cast<int64_t>(swaps);
    const double denominator =
        std::sqrt(static_cast<double>(total_pairs - ties_x) *
                  static_cast<double>(total_pairs - ties_y));
    return statsdetail::clamp_unit(static_cast<double>(numerator) / denominator);
}

// Shannon entropy of a binary label vector, in bits.
inline double entropy_bits(std::span<const uint8_t> labels) {
    if (labels.empty()) throw std::invalid_argument("entropy of empty vector");
    size_t n1 = 0;
    for (uint8_t v : labels) n1 += v;
    const size_t n0 = labels.size() - n1;
    const double n = static_cast<double>(labels.size());
    double h = 0.0;
    for (size_t c : {n0, n1}) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

namespace statsdetail {

// Equal-frequency bin edges as type-1 quantiles (actual data values), so the
// binning is a function of the value ordering alone and survives strictly
// increasing transforms. Duplicate edges collapse, which can lower the
// effective bin count.
inline std::vector<double> quantile_edges(std::vector<double> sorted, int bins) {
    const size_t n = sorted.size();
    std::vector<double> edges;
    edges.reserve(static_cast<size_t>(bins) - 1);
    for (int k = 1; k < bins; ++k) {
        const size_t pos =
            (static_cast<size_t>(k) * n + static_cast<size_t>(bins) - 1) /
            static_cast<size_t>(bins);  // ceil(k*n/bins)
        const double edge = sorted[pos - 1];
        if (edges.empty() || edge != edges.back()) edges.push_back(edge);
    }
    return edges;
}

inline size_t bin_of(double v, const std::vector<double>& edges) {
    // first bin whose edge is >= v; values above every edge go to the last bin
    size_t lo = 0, hi = edges.size();
    while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (v <= edges[mid])
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

}  // namespace statsdetail

// Information gain of a discretized feature about the binary label:
// IG = H(y) - sum_b (n_b/n) H(y | bin b), clamped into [0, H(y)].
inline double information_gain(std::span<const double> x,
                               std::span<const uint8_t> y, int bins) {
    if (x.size() != y.size())
        throw std::invalid_argument("information_gain: length mismatch");
    if (x.empty()) throw std::invalid_argument("information_gain: empty input");
    if (bins < 2) throw std::invalid_argument("information_gain: bins must be >= 2");

    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const auto edges = statsdetail::quantile_edges(std::move(sorted), bins);

    const size_t n_bins = edges.size() + 1;
    std::vector<size_t> count0(n_bins, 0), count1(n_bins, 0);
    for (size_t i = 0; i < x.size(); ++i) {
        const size_t b = statsdetail::bin_of(x[i], edges);
        (y[i] ? count1[b] : count0[b])++;
    }

    const double n = static_cast<double>(x.size());
    double conditional = 0.0;
    for (size_t b = 0; b < n_bins; ++b) {
        const double nb = static_cast<double>(count0[b] + count1[b]);
        if (nb == 0.0) continue;
        double hb = 0.0;
        for (size_t c : {count0[b], count1[b]}) {
            if (c == 0) continue;
            const double p = static_cast<double>(c) / nb;
            hb -= p * std::log2(p);
        }
        conditional += (nb / n) * hb;
    }
    const double h = entropy_bits(y);
    return std::clamp(h - conditional, 0.0, h);
}

// Per-feature statistics against the label.
struct FeatureStats {
    std::string name;
    std::optional<double> pearson;
    std::optional<double> spearman;
    std::optional<double> kendall;
    double info_gain = 0.0;
};

struct CorrelationTable {
    std::vector<FeatureStats> rows;
    double label_entropy = 0.0;
};

// All four statistics of every feature against y (y cast to {0.0, 1.0} for
// the correlations). Features are independent, so the loop parallelizes with
// per-index output slots; ordering follows the dataset's feature order.
inline CorrelationTable correlation_table(const Dataset& d, int bins = 10) {
    if (!d.has_labels()) throw DataError("correlation_table: dataset has no labels");
    if (d.n_rows < 2) throw DataError("correlation_table: need at least 2 rows");
    if (!d.both_classes_present())
        throw DataError("correlation_table: both classes must be present");

    std::vector<double> y_num(d.n_rows);
    for (size_t r = 0; r < d.n_rows; ++r) y_num[r] = static_cast<double>(d.y[r]);

    CorrelationTable table;
    table.label_entropy = entropy_bits(d.y);
    table.rows.resize(d.n_features);
    parallel_for(d.n_features, [&](size_t j) {
        const auto col = d.column(j);
        FeatureStats fs;
        fs.name = d.feature_names[j];
        fs.pearson = pearson(col, y_num);
        fs.spearman = spearman(col, y_num);
        fs.kendall = kendall_tau_b(col, y_num);
        fs.info_gain = information_gain(col, d.y, bins);
        table.rows[j] = std::move(fs);
    });
    return table;
}

inline nlohmann::json correlation_table_to_json(const CorrelationTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const auto& r : t.rows) {
        rows.push_back({{"feature", r.name},
                        {"pearson", opt(r.pearson)},
                        {"spearman", opt(r.spearman)},
                        {"kendall", opt(r.kendall)},
                        {"info_gain", r.info_gain}});
    }
    return {{"schema_version", kSchemaVersion},
            {"label_entropy", t.label_entropy},
            {"rows", rows}};
}

inline std::string correlation_table_to_csv(const CorrelationTable& t) {
    std::ostringstream os;
    os << "feature,pearson,spearman,kendall,info_gain\n";
    auto cell = [&](const std::optional<double>& v) -> std::string {
        if (!v) return "";
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof(buf), *v);
        return std::string(buf, res.ptr);
    };
    for (const auto& r : t.rows) {
        std::string name = r.name;
        const bool quote = name.find_first_of(",\"\n") != std::string::npos;
        if (quote) {
            std::string q = "\"";
            for (char c : name) {
                if (c == '"') q += '"';
                q += c;
            }
            q += '"';
            name = q;
        }
        os << name << ',' << cell(r.pearson) << ',' << cell(r.spearman) << ','
           << cell(r.kendall) << ',' << cell(std::optional<double>(r.info_gain))
           << '\n';
    }
    return os.str();
}

}  // namespace flowsieve
