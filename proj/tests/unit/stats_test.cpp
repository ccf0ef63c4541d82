#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "flowsieve/rng.hpp"
#include "flowsieve/stats.hpp"
#include "support/reference.hpp"

using namespace flowsieve;

namespace {

using DV = std::vector<double>;
using BV = std::vector<uint8_t>;

TEST(Pearson, PerfectPositiveAndNegative) {
    const DV x{1, 2, 3};
    EXPECT_DOUBLE_EQ(*pearson(x, DV{2, 4, 6}), 1.0);
    EXPECT_DOUBLE_EQ(*pearson(x, DV{3, 2, 1}), -1.0);
}

TEST(Pearson, ZeroVarianceIsUndefined) {
    EXPECT_FALSE(pearson(DV{5, 5, 5}, DV{1, 2, 3}).has_value());
    EXPECT_FALSE(pearson(DV{1, 2, 3}, DV{5, 5, 5}).has_value());
}

TEST(Pearson, PreconditionViolationsThrow) {
    EXPECT_THROW(pearson(DV{1, 2}, DV{1, 2, 3}), std::invalid_argument);
    EXPECT_THROW(pearson(DV{1}, DV{1}), std::invalid_argument);
}

TEST(Pearson, MatchesTwoPassOracleOnRandomPairs) {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 10 + rng.below(200);
        const auto x = refimpl::random_vector(rng, n, trial % 2 == 0);
        const auto y = refimpl::random_vector(rng, n, trial % 3 == 0);
        const auto got = pearson(x, y);
        const auto want = refimpl::pearson_two_pass(x, y);
        ASSERT_EQ(got.has_value(), want.has_value());
        if (got) EXPECT_NEAR(*got, *want, 1e-12);
    }
}

TEST(Ranks, AverageTies) {
    const auto r = fractional_ranks(DV{1, 2, 2, 3});
    EXPECT_EQ(r, (std::vector<double>{1.0, 2.5, 2.5, 4.0}));
}

TEST(Spearman, MonotoneNonlinearIsOne) {
    EXPECT_DOUBLE_EQ(*spearman(DV{1, 2, 3}, DV{1, 4, 9}), 1.0);
}

TEST(Spearman, IdenticalTiedVectors) {
    EXPECT_DOUBLE_EQ(*spearman(DV{1, 2, 2, 3}, DV{1, 2, 2, 3}), 1.0);
}

TEST(Spearman, MatchesRankComposeOracle) {
    Rng rng(202);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 10 + rng.below(120);
        const auto x = refimpl::random_vector(rng, n, true);
        const auto y = refimpl::random_vector(rng, n, true);
        const auto got = spearman(x, y);
        const auto want = refimpl::spearman_rank_compose(x, y);
        ASSERT_EQ(got.has_value(), want.has_value());
        if (got) EXPECT_NEAR(*got, *want, 1e-12);
    }
}

TEST(Kendall, PerfectConcordanceAndDiscordance) {
    EXPECT_DOUBLE_EQ(*kendall_tau_b(DV{1, 2, 3}, DV{1, 2, 3}), 1.0);
    EXPECT_DOUBLE_EQ(*kendall_tau_b(DV{1, 2, 3}, DV{3, 2, 1}), -1.0);
}

TEST(Kendall, ConstantVectorIsUndefined) {
    EXPECT_FALSE(kendall_tau_b(DV{1, 1, 1}, DV{1, 2, 3}).has_value());
}

TEST(Kendall, MatchesBruteForceOracleWithHeavyTies) {
    Rng rng(303);
    for (int trial = 0; trial < 100; ++trial) {
        const size_t n = 5 + rng.below(196);
        const auto x = refimpl::random_vector(rng, n, true);
        const auto y = refimpl::random_vector(rng, n, trial % 2 == 0);
        const auto got = kendall_tau_b(x, y);
        const auto want = refimpl::kendall_pair_count(x, y);
        ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
        if (got) EXPECT_NEAR(*got, *want, 1e-12) << "trial " << trial;
    }
}

TEST(CorrelationInvariants, SymmetrySignAndAffine) {
    Rng rng(404);
    for (int trial = 0; trial < 25; ++trial) {
        const size_t n = 8 + rng.below(60);
        const auto x = refimpl::random_vector(rng, n, trial % 2 == 0);
        const auto y = refimpl::random_vector(rng, n, trial % 3 == 0);
        const double a = 0.25 + rng.uniform() * 4.0;
        const double b = rng.normal() * 10.0;
        auto ax = x;
        auto neg = x;
        for (size_t i = 0; i < n; ++i) {
            ax[i] = a * x[i] + b;
            neg[i] = -x[i];
        }
        using StatFn = std::optional<double> (*)(std::span<const double>,
                                                 std::span<const double>);
        for (StatFn fn : {static_cast<StatFn>(pearson), static_cast<StatFn>(spearman),
                          static_cast<StatFn>(kendall_tau_b)}) {
            const auto base = fn(x, y);
            const auto swapped = fn(y, x);
            ASSERT_EQ(base.has_value(), swapped.has_value());
            if (base) EXPECT_NEAR(*base, *swapped, 1e-12);
            const auto scaled = fn(ax, y);
            if (base) EXPECT_NEAR(*base, *scaled, 1e-12);
            const auto flipped = fn(neg, y);
            if (base) EXPECT_NEAR(*base, -*flipped, 1e-12);
        }
    }
}

TEST(Entropy, KnownValues) {
    EXPECT_DOUBLE_EQ(entropy_bits(BV{0, 0, 1, 1}), 1.0);
    EXPECT_DOUBLE_EQ(entropy_bits(BV{1, 1, 1}), 0.0);
    // -(3/4 log2 3/4 + 1/4 log2 1/4), evaluated independently
    EXPECT_NEAR(entropy_bits(BV{0, 0, 0, 1}), 0.8112781244591328, 1e-12);
    EXPECT_THROW(entropy_bits(BV{}), std::invalid_argument);
}

TEST(InformationGain, PerfectSeparatorGetsFullEntropy) {
    const DV x{1, 1, 2, 2};
    const BV y{0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(information_gain(x, y, 2), 1.0);
}

TEST(InformationGain, ConstantFeatureIsZero) {
    const DV x{3, 3, 3, 3};
    const BV y{0, 1, 0, 1};
    EXPECT_DOUBLE_EQ(information_gain(x, y, 10), 0.0);
}

TEST(InformationGain, IndependentFeatureIsNearZero) {
    Rng rng(505);
    const size_t n = 10000;
    std::vector<double> x(n);
    std::vector<uint8_t> y(n);
    for (size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = static_cast<uint8_t>(rng.below(2));
    }
    const double ig = information_gain(x, y, 10);
    EXPECT_LT(ig, 0.01);
    EXPECT_NEAR(ig, refimpl::info_gain_histogram(x, y, 10), 1e-12);
}

TEST(InformationGain, BoundedByLabelEntropy) {
    Rng rng(606);
    for (int trial = 0; trial < 40; ++trial) {
        const size_t n = 20 + rng.below(300);
        std::vector<double> x = refimpl::random_vector(rng, n, trial % 2 == 0);
        std::vector<uint8_t> y(n);
        for (size_t i = 0; i < n; ++i) y[i] = static_cast<uint8_t>(rng.below(2));
        y[0] = 0;
        y[1] = 1;
        const int bins = 2 + static_cast<int>(rng.below(14));
        const double ig = information_gain(x, y, bins);
        EXPECT_GE(ig, 0.0);
        EXPECT_LE(ig, entropy_bits(y) + 1e-15);
        EXPECT_NEAR(ig, refimpl::info_gain_histogram(x, y, bins), 1e-12);
    }
}

TEST(CorrelationTable, FeatureEqualToLabel) {
    Dataset d;
    d.feature_names = {"same", "flipped"};
    d.n_features = 2;
    d.n_rows = 8;
    d.y = {0, 1, 0, 1, 1, 0, 1, 0};
    d.x.resize(16);
    for (size_t r = 0; r < 8; ++r) {
        d.at(r, 0) = d.y[r];
        d.at(r, 1) = 1.0 - d.y[r];
    }
    const auto table = correlation_table(d, 4);
    EXPECT_DOUBLE_EQ(*table.rows[0].pearson, 1.0);
    EXPECT_DOUBLE_EQ(*table.rows[1].pearson, -1.0);
    EXPECT_DOUBLE_EQ(table.rows[0].info_gain, entropy_bits(d.y));
    EXPECT_DOUBLE_EQ(table.label_entropy, 1.0);
}

TEST(CorrelationTable, MatchesPerFeatureComposition) {
    Rng rng(707);
    const Dataset d = refimpl::random_dataset(rng, 120, 20);
    const auto table = correlation_table(d, 10);
    std::vector<double> y_num(d.n_rows);
    for (size_t r = 0; r < d.n_rows; ++r) y_num[r] = d.y[r];
    for (size_t j = 0; j < d.n_features; ++j) {
        const auto col = d.column(j);
        const auto p = pearson(col, y_num);
        ASSERT_EQ(table.rows[j].pearson.has_value(), p.has_value());
        if (p) EXPECT_DOUBLE_EQ(*table.rows[j].pearson, *p);
        const auto s = spearman(col, y_num);
        if (s) EXPECT_DOUBLE_EQ(*table.rows[j].spearman, *s);
        const auto k = kendall_tau_b(col, y_num);
        if (k) EXPECT_DOUBLE_EQ(*table.rows[j].kendall, *k);
        EXPECT_DOUBLE_EQ(table.rows[j].info_gain, information_gain(col, d.y, 10));
    }
}

TEST(CorrelationTable, SingleClassThrows) {
    Dataset d;
    d.feature_names = {"f"};
    d.n_features = 1;
    d.n_rows = 4;
    d.x = {1, 2, 3, 4};
    d.y = {0, 0, 0, 0};
    EXPECT_THROW(correlation_table(d, 4), DataError);
}

TEST(CorrelationTable, DeterministicAcrossThreadCaps) {
    Rng rng(808);
    const Dataset d = refimpl::random_dataset(rng, 200, 12);
    set_thread_cap(1);
    const auto t1 = correlation_table(d, 10);
    set_thread_cap(4);
    const auto t4 = correlation_table(d, 10);
    set_thread_cap(0);
    for (size_t j = 0; j < d.n_features; ++j) {
        EXPECT_EQ(t1.rows[j].pearson, t4.rows[j].pearson);
        EXPECT_EQ(t1.rows[j].spearman, t4.rows[j].spearman);
        EXPECT_EQ(t1.rows[j].kendall, t4.rows[j].kendall);
        EXPECT_EQ(t1.rows[j].info_gain, t4.rows[j].info_gain);
    }
}

TEST(CorrelationTable, CsvHasHeaderAndRows) {
    Rng rng(909);
    const Dataset d = refimpl::random_dataset(rng, 50, 3);
    const auto csv = correlation_table_to_csv(correlation_table(d, 5));
    EXPECT_EQ(csv.rfind("feature,pearson,spearman,kendall,info_gain\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

}  // namespace
