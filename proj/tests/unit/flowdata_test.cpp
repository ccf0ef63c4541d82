#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "flowsieve/flowdata.hpp"

using namespace flowsieve;

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();
const double kInf = std::numeric_limits<double>::infinity();

RawTable numeric_table(const std::vector<std::vector<double>>& cols,
                       const std::vector<std::string>& names) {
    RawTable t;
    t.n_rows = cols.empty() ? 0 : cols[0].size();
    for (size_t j = 0; j < cols.size(); ++j) {
        Column c;
        c.name = names[j];
        c.type = ColumnType::kNumeric;
        c.nums = cols[j];
        t.columns.push_back(std::move(c));
    }
    return t;
}

TEST(Clean, DropsNanAndInfinityRows) {
    const RawTable t = numeric_table({{1, kNan, 4}, {2, 3, kInf}}, {"a", "b"});
    CleanStats stats;
    const RawTable out = clean(t, &stats);
    EXPECT_EQ(out.n_rows, 1u);
    EXPECT_DOUBLE_EQ(out.columns[0].nums[0], 1.0);
    EXPECT_DOUBLE_EQ(out.columns[1].nums[0], 2.0);
    EXPECT_EQ(stats.rows_dropped, 2u);
}

TEST(Clean, IdentityOnValidTable) {
    const RawTable t = numeric_table({{1, 2}, {3, 4}}, {"a", "b"});
    CleanStats stats;
    const RawTable out = clean(t, &stats);
    EXPECT_EQ(out.n_rows, 2u);
    EXPECT_EQ(stats.rows_dropped, 0u);
}

TEST(Clean, AllRowsInvalidGivesEmptyTable) {
    const RawTable t = numeric_table({{kNan, kInf}}, {"a"});
    CleanStats stats;
    const RawTable out = clean(t, &stats);
    EXPECT_EQ(out.n_rows, 0u);
    EXPECT_EQ(stats.rows_dropped, 2u);
}

TEST(Clean, IsIdempotent) {
    const RawTable t = numeric_table({{1, kNan, 3}, {2, 5, kInf}}, {"a", "b"});
    const RawTable once = clean(t);
    const RawTable twice = clean(once);
    ASSERT_EQ(once.n_rows, twice.n_rows);
    for (size_t j = 0; j < once.columns.size(); ++j)
        EXPECT_EQ(once.columns[j].nums, twice.columns[j].nums);
}

TEST(DropColumns, RemovesNamedColumn) {
    const RawTable t = numeric_table({{1}, {2}}, {"Flow ID", "x"});
    const RawTable out = drop_columns(t, {"Flow ID"});
    ASSERT_EQ(out.columns.size(), 1u);
    EXPECT_EQ(out.columns[0].name, "x");
}

TEST(DropColumns, MissingNameIsWarningNotError) {
    const RawTable t = numeric_table({{1}}, {"x"});
    std::vector<std::string> warnings;
    const RawTable out = drop_columns(t, {"nonexistent"}, &warnings);
    EXPECT_EQ(out.columns.size(), 1u);
    ASSERT_EQ(warnings.size(), 1u);
}

TEST(DropColumns, DroppingEveryColumnIsAnError) {
    const RawTable t = numeric_table({{1}, {2}}, {"a", "b"});
    EXPECT_THROW(drop_columns(t, {"a", "b"}), DataError);
}

TEST(Binarize, CicIotStyleLabels) {
    RawTable t = numeric_table({{1, 2, 3}}, {"f"});
    Column label;
    label.name = "label";
    label.type = ColumnType::kText;
    label.texts = {"BenignTraffic", "DDoS-ICMP_Flood", "DoS-UDP_Flood"};
    t.columns.push_back(label);

    BinarizeReport report;
    const Dataset d = binarize_labels(t, cic_iot2023_rule(), "label", &report);
    ASSERT_EQ(d.n_rows, 3u);
    EXPECT_EQ(d.y, (std::vector<uint8_t>{0, 1, 1}));
    EXPECT_EQ(report.benign, 1u);
    EXPECT_EQ(report.attack, 2u);
}

TEST(Binarize, CicIdsDropsUnknownLabels) {
    RawTable t = numeric_table({{1, 2, 3}}, {"f"});
    Column label;
    label.name = "Label";
    label.type = ColumnType::kText;
    label.texts = {"BENIGN", "DDoS", "PortScan"};
    t.columns.push_back(label);

    BinarizeReport report;
    const Dataset d = binarize_labels(t, cic_ids2017_rule(), "Label", &report);
    ASSERT_EQ(d.n_rows, 2u);
    EXPECT_EQ(d.y, (std::vector<uint8_t>{0, 1}));
    EXPECT_EQ(report.dropped_unknown, 1u);
}

TEST(Binarize, UnknownPolicyErrorThrows) {
    RawTable t = numeric_table({{1}}, {"f"});
    Column label;
    label.name = "Label";
    label.type = ColumnType::kText;
    label.texts = {"PortScan"};
    t.columns.push_back(label);
    LabelRule rule = cic_ids2017_rule();
    rule.unknown_policy = LabelRule::UnknownPolicy::kError;
    EXPECT_THROW(binarize_labels(t, rule, "Label"), DataError);
}

TEST(Binarize, SingleClassIsWarningNotError) {
    RawTable t = numeric_table({{1, 2}}, {"f"});
    Column label;
    label.name = "Label";
    label.type = ColumnType::kText;
    label.texts = {"BENIGN", "BENIGN"};
    t.columns.push_back(label);
    BinarizeReport report;
    const Dataset d = binarize_labels(t, cic_ids2017_rule(), "Label", &report);
    EXPECT_EQ(d.n_rows, 2u);
    ASSERT_EQ(report.warnings.size(), 1u);
    EXPECT_NE(report.warnings[0].find("single-class"), std::string::npos);
}

TEST(Binarize, MissingLabelColumnThrows) {
    const RawTable t = numeric_table({{1}}, {"f"});
    EXPECT_THROW(binarize_labels(t, cic_ids2017_rule(), "Label"), DataError);
}

TEST(Binarize, LeftoverTextColumnThrows) {
    RawTable t = numeric_table({{1}}, {"f"});
    Column txt;
    txt.name = "Source IP";
    txt.type = ColumnType::kText;
    txt.texts = {"10.0.0.1"};
    t.columns.push_back(txt);
    Column label;
    label.name = "Label";
    label.type = ColumnType::kText;
    label.texts = {"BENIGN"};
    t.columns.push_back(label);
    EXPECT_THROW(binarize_labels(t, cic_ids2017_rule(), "Label"), DataError);
}

TEST(Binarize, RowOrderIsPreserved) {
    RawTable t = numeric_table({{10, 20, 30, 40}}, {"f"});
    Column label;
    label.name = "Label";
    label.type = ColumnType::kText;
    label.texts = {"DDoS", "BENIGN", "PortScan", "DDoS"};
    t.columns.push_back(label);
    const Dataset d = binarize_labels(t, cic_ids2017_rule(), "Label");
    ASSERT_EQ(d.n_rows, 3u);
    EXPECT_DOUBLE_EQ(d.at(0, 0), 10.0);
    EXPECT_DOUBLE_EQ(d.at(1, 0), 20.0);
    EXPECT_DOUBLE_EQ(d.at(2, 0), 40.0);
    EXPECT_EQ(d.y, (std::vector<uint8_t>{1, 0, 1}));
}

TEST(Binarize, OverlappingRuleIsConfigError) {
    LabelRule rule;
    rule.benign_labels = {"X"};
    rule.attack_labels = {"X"};
    EXPECT_THROW(rule.validate(), ConfigError);
}

TEST(Concat, AppendsMatchingSchemas) {
    const RawTable a = numeric_table({{1, 2}}, {"f"});
    const RawTable b = numeric_table({{3}}, {"f"});
    const RawTable out = concat_tables({a, b});
    EXPECT_EQ(out.n_rows, 3u);
    EXPECT_EQ(out.columns[0].nums, (std::vector<double>{1, 2, 3}));
}

TEST(Concat, MismatchedSchemaThrows) {
    const RawTable a = numeric_table({{1}}, {"f"});
    const RawTable b = numeric_table({{1}}, {"g"});
    EXPECT_THROW(concat_tables({a, b}), DataError);
}

}  // namespace
