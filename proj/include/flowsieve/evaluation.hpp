#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowsieve/classifiers.hpp"
#include "flowsieve/dataset.hpp"
#include "flowsieve/error.hpp"
#include "flowsieve/rng.hpp"
#include "flowsieve/version.hpp"

namespace flowsieve {

struct ConfusionMatrix {
    uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    uint64_t total() const { return tp + tn + fp + fn; }
};

inline ConfusionMatrix confusion(std::span<const uint8_t> predicted,
                                 std::span<const uint8_t> actual) {
    if (predicted.size() != actual.size())
        throw DataError("confusion: length mismatch");
    ConfusionMatrix cm;
    for (size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i]) {
            (actual[i] ? cm.tp : cm.fp)++;
        } else {
            (actual[i] ? cm.fn : cm.tn)++;
        }
    }
    return cm;
}

struct MetricsResult {
    double accuracy = 0.0;
    double precision_pos = 0.0, recall_pos = 0.0, f1_pos = 0.0;
    double precision_weighted = 0.0, recall_weighted = 0.0, f1_weighted = 0.0;
    bool degenerate = false;  // some 0/0 ratio was reported as 0
};

// Accuracy = (TP+TN)/total, precision = TP/(TP+FP), recall = TP/(TP+FN),
// F1 = 2PR/(P+R). Weighted variants are the support-weighted means of the
// one-vs-rest per-class metrics. 0/0 ratios report 0 and set `degenerate`.
inline MetricsResult metrics_from_confusion(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("metrics: empty confusion matrix");
    MetricsResult m;
    auto ratio = [&m](uint64_t num, uint64_t den) {
        if (den == 0) {
            m.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    auto f1_of = [&m](double p, double r) {
        if (p + r == 0.0) {
            m.degenerate = true;
            return 0.0;
        }
        return 2.0 * p * r / (p + r);
    };

    const double total = static_cast<double>(cm.total());
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / total;

    m.precision_pos = ratio(cm.tp, cm.tp + cm.fp);
    m.recall_pos = ratio(cm.tp, cm.tp + cm.fn);
    m.f1_pos = f1_of(m.precision_pos, m.recall_pos);

    // class 0, one-vs-rest: predicted 0 & actual 0 is tn, etc.
    const double precision_neg = ratio(cm.tn, cm.tn + cm.fn);
    const double recall_neg = ratio(cm.tn, cm.tn + cm.fp);
    const double f1_neg = f1_of(precision_neg, recall_neg);

    const double support_pos = static_cast<double>(cm.tp + cm.fn);
    const double support_neg = static_cast<double>(cm.tn + cm.fp);
    m.precision_weighted =
        (support_neg * precision_neg + support_pos * m.precision_pos) / total;
    m.recall_weighted = (support_neg * recall_neg + support_pos * m.recall_pos) / total;
    m.f1_weighted = (support_neg * f1_neg + support_pos * m.f1_pos) / total;
    return m;
}

// Mean squared error on hard labels; equals (fp+fn)/total.
inline double mse_hard(std::span<const uint8_t> predicted,
                       std::span<const uint8_t> actual) {
    if (predicted.size() != actual.size()) throw DataError("mse: length mismatch");
    if (predicted.empty()) throw DataError("mse: empty input");
    uint64_t wrong = 0;
    for (size_t i = 0; i < predicted.size(); ++i)
        wrong += predicted[i] != actual[i];
    return static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

// Brier-style alternative on probabilities, behind a config flag.
inline double mse_brier(std::span<const double> scores,
                        std::span<const uint8_t> actual) {
    if (scores.size() != actual.size()) throw DataError("mse: length mismatch");
    if (scores.empty()) throw DataError("mse: empty input");
    double total = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const double d = scores[i] - static_cast<double>(actual[i]);
        total += d * d;
    }
    return total / static_cast<double>(scores.size());
}

struct EvalReport {
    ConfusionMatrix confusion;
    MetricsResult metrics;
    double mse = 0.0;
    double train_seconds = 0.0;
    std::optional<std::vector<double>> cv_fold_accuracies;
};

namespace evaldetail {

// Largest-remainder apportionment of round(total * fraction) test rows over
// the per-class counts; remainder ties go to the lower class index.
inline std::vector<size_t> test_counts_per_class(const std::vector<size_t>& class_counts,
                                                 double fraction) {
    size_t total = 0;
    for (size_t c : class_counts) total += c;
    const auto target = static_cast<size_t>(
        std::llround(static_cast<double>(total) * fraction));
    std::vector<size_t> base(class_counts.size());
    std::vector<double> remainder(class_counts.size());
    size_t assigned = 0;
    for (size_t c = 0; c < class_counts.size(); ++c) {
        const double raw = static_cast<double>(class_counts[c]) * fraction;
        base[c] = static_cast<size_t>(std::floor(raw));
        remainder[c] = raw - static_cast<double>(base[c]);
        assigned += base[c];
    }
    std::vector<size_t> order(class_counts.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
    for (size_t i = 0; assigned < target && i < order.size(); ++i) {
        ++base[order[i]];
        ++assigned;
    }
    return base;
}

}  // namespace evaldetail

// 70/30-style stratified split: each class is shuffled by the seed and
// contributes round(count * fraction) rows to the test side (largest
// remainder keeps the total exact). Row order within each side follows the
// original dataset.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& d,
                                                    double test_fraction,
                                                    uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("test_fraction must be in (0, 1)");
    if (!d.has_labels() || !d.both_classes_present())
        throw DataError("stratified_split: both classes must be present");

    std::vector<std::vector<size_t>> by_class(2);
    for (size_t r = 0; r < d.n_rows; ++r) by_class[d.y[r]].push_back(r);
    for (const auto& rows : by_class) {
        if (rows.size() < 2)
            throw DataError("stratified_split: a class has fewer than 2 rows");
    }

    const auto test_counts = evaldetail::test_counts_per_class(
        {by_class[0].size(), by_class[1].size()}, test_fraction);

    std::vector<size_t> test_rows, train_rows;
    for (size_t c = 0; c < 2; ++c) {
        auto rows = by_class[c];
        Rng rng(derive_seed(seed, c));
        rng.shuffle(rows);
        for (size_t i = 0; i < rows.size(); ++i) {
            (i < test_counts[c] ? test_rows : train_rows).push_back(rows[i]);
        }
    }
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    return {take_rows(d, train_rows), take_rows(d, test_rows)};
}

// Stratified fold labels: per class, seeded shuffle then round-robin, so
// per-class fold sizes differ by at most one.
inline std::vector<size_t> stratified_fold_assignment(std::span<const uint8_t> y,
                                                      size_t k, uint64_t seed) {
    std::vector<std::vector<size_t>> by_class(2);
    for (size_t r = 0; r < y.size(); ++r) by_class[y[r]].push_back(r);
    std::vector<size_t> fold(y.size(), 0);
    for (size_t c = 0; c < 2; ++c) {
        auto rows = by_class[c];
        if (!rows.empty() && rows.size() < k)
            throw DataError("kfold: class " + std::to_string(c) + " has " +
                            std::to_string(rows.size()) + " rows, fewer than k = " +
                            std::to_string(k));
        Rng rng(derive_seed(seed, 1000 + c));
        rng.shuffle(rows);
        for (size_t i = 0; i < rows.size(); ++i) fold[rows[i]] = i % k;
    }
    return fold;
}

using TrainerFn = std::function<ClassifierModel(const Dataset&)>;

// Stratified k-fold cross-validation; returns the k test accuracies in fold
// order. Each fold trains on the other k-1 folds.
inline std::vector<double> kfold_cv(const Dataset& d, size_t k,
                                    const TrainerFn& trainer, uint64_t seed) {
    if (k < 2) throw ConfigError("kfold: k must be >= 2");
    if (!d.has_labels() || !d.both_classes_present())
        throw DataError("kfold: both classes must be present");
    const auto fold = stratified_fold_assignment(d.y, k, seed);
    std::vector<double> accuracies(k);
    for (size_t f = 0; f < k; ++f) {
        std::vector<size_t> train_rows, test_rows;
        for (size_t r = 0; r < d.n_rows; ++r)
            (fold[r] == f ? test_rows : train_rows).push_back(r);
        const Dataset train = take_rows(d, train_rows);
        const Dataset test = take_rows(d, test_rows);
        const ClassifierModel model = trainer(train);
        const Prediction pred = predict(model, test);
        const ConfusionMatrix cm = confusion(pred.labels, test.y);
        accuracies[f] =
            static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    }
    return accuracies;
}

// Wall-clock seconds of the training call alone, on a monotonic clock.
template <class Trainer>
auto timed_train(Trainer&& trainer, const Dataset& train)
    -> std::pair<decltype(trainer(train)), double> {
    const auto start = std::chrono::steady_clock::now();
    auto model = trainer(train);
    const auto end = std::chrono::steady_clock::now();
    const double seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(end - start).count();
    return {std::move(model), seconds};
}

// Evaluates a model on a labeled dataset: confusion, the four headline
// metrics plus weighted variants, and MSE (hard labels by default).
inline EvalReport evaluate_model(const ClassifierModel& m, const Dataset& test,
                                 bool brier_mse = false) {
    if (!test.has_labels()) throw DataError("evaluate: dataset has no labels");
    const Prediction pred = predict(m, test);
    EvalReport r;
    r.confusion = confusion(pred.labels, test.y);
    r.metrics = metrics_from_confusion(r.confusion);
    r.mse = brier_mse ? mse_brier(pred.scores, test.y) : mse_hard(pred.labels, test.y);
    return r;
}

// Timing is run metadata, not part of the deterministic artifact, so it is
// only included on request.
inline nlohmann::json eval_report_to_json(const EvalReport& r,
                                          bool include_timing = false) {
    nlohmann::json j = {
        {"schema_version", kSchemaVersion},
        {"confusion",
         {{"tp", r.confusion.tp}, {"tn", r.confusion.tn}, {"fp", r.confusion.fp},
          {"fn", r.confusion.fn}}},
        {"accuracy", r.metrics.accuracy},
        {"precision", r.metrics.precision_pos},
        {"recall", r.metrics.recall_pos},
        {"f1", r.metrics.f1_pos},
        {"precision_weighted", r.metrics.precision_weighted},
        {"recall_weighted", r.metrics.recall_weighted},
        {"f1_weighted", r.metrics.f1_weighted},
        {"mse", r.mse},
        {"degenerate_ratio_reported_as_zero", r.metrics.degenerate},
    };
    if (r.cv_fold_accuracies) j["cv_fold_accuracies"] = *r.cv_fold_accuracies;
    if (include_timing) j["train_seconds"] = r.train_seconds;
    return j;
}

// Human-readable table with the conventional row labels.
inline std::string render_text_table(const EvalReport& r) {
    std::ostringstream os;
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f %%", v * 100.0);
        return std::string(buf);
    };
    os << "Accuracy        " << pct(r.metrics.accuracy) << "\n";
    os << "Precision       " << pct(r.metrics.precision_weighted) << "\n";
    os << "Recall          " << pct(r.metrics.recall_weighted) << "\n";
    os << "F1-Score        " << pct(r.metrics.f1_weighted) << "\n";
    {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.2f seconds", r.train_seconds);
        os << "Training Time   " << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.3f", r.mse);
        os << "Mean Squared Error " << buf << "\n";
    }
    if (r.cv_fold_accuracies) {
        os << "CV fold accuracies:";
        for (double a : *r.cv_fold_accuracies) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), " %.3f%%", a * 100.0);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace flowsieve
