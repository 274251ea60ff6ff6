#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include <levy/report.hpp>

using namespace levy;

namespace {

ExperimentReport sample_report() {
    ExperimentReport r;
    r.experiment_id = "entropy_slope";
    r.spec_ids = {"sas:1.5,1"};
    r.add("slope", 0.6666666666666666, 2.0 / 3.0, 0.05, "slope", Comparison::RelDiff);
    r.add("intercept", 1.234567890123456, 1.2, 0.1, "intercept", Comparison::AbsDiff);
    r.add("sup", 3e-7, 1e-6, 0.0, "sup", Comparison::Below);
    r.provenance = {{"seed", 1}, {"grid_points", 65536}};
    r.runtime_seconds = 1.5;
    return r;
}

}  // namespace

TEST(MetricTest, Comparisons) {
    Metric m{"x", 1.04, 1.0, 0.05, "k", Comparison::AbsDiff};
    EXPECT_TRUE(metric_passes(m));
    m.value = 1.06;
    EXPECT_FALSE(metric_passes(m));
    m = {"x", 10.4, 10.0, 0.05, "k", Comparison::RelDiff};
    EXPECT_TRUE(metric_passes(m));
    m.value = 10.6;
    EXPECT_FALSE(metric_passes(m));
    m = {"x", 1.0, 0.99, 0.02, "k", Comparison::AtMost};
    EXPECT_TRUE(metric_passes(m));
    m = {"x", 0.97, 1.0, 0.02, "k", Comparison::AtLeast};
    EXPECT_FALSE(metric_passes(m));
    m = {"x", 1.0, 1.0, 5.0, "k", Comparison::Below};
    EXPECT_FALSE(metric_passes(m));
    m.value = std::numeric_limits<double>::quiet_NaN();
    m.comparison = Comparison::AtLeast;
    EXPECT_FALSE(metric_passes(m));
}

TEST(MetricTest, ComparisonNamesRoundTrip) {
    for (auto c : {Comparison::AbsDiff, Comparison::RelDiff, Comparison::AtMost, Comparison::AtLeast, Comparison::Below})
        EXPECT_EQ(comparison_from_name(comparison_name(c)), c);
    EXPECT_THROW(comparison_from_name("roughly"), SpecError);
}

TEST(ReportTest, StatusFollowsMetrics) {
    auto r = sample_report();
    EXPECT_EQ(r.status(), ReportStatus::Pass);
    r.add("extra", 2.0, 1.0, 0.5, "extra", Comparison::AbsDiff);
    EXPECT_EQ(r.status(), ReportStatus::Fail);
    EXPECT_EQ(r.failing_metrics(), std::vector<std::string>{"extra"});
    const auto s = skipped_report("renyi_gap", {"tempered_stable:1.2,1,1,1"}, "no exact quantized law");
    EXPECT_EQ(s.status(), ReportStatus::Skipped);
}

TEST(ReportTest, ValuesStoredAtTwelveDigits) {
    const auto r = sample_report();
    EXPECT_EQ(r.metrics[1].value, 1.23456789012);
    EXPECT_EQ(r.metrics[0].value, r.metrics[0].target);
}

TEST(ReportTest, JsonRoundTripPreservesVerdicts) {
    auto r = sample_report();
    r.add("borderline", 1.1000000000004, 1.0, 0.1, "b", Comparison::AbsDiff);
    const auto j = report_to_json(r);
    EXPECT_EQ(j.at("schema_version"), kReportSchemaVersion);
    EXPECT_TRUE(j.contains("timestamp"));
    const auto back = report_from_json(json::parse(j.dump()));
    ASSERT_EQ(back.metrics.size(), r.metrics.size());
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
        EXPECT_EQ(back.metrics[i].value, r.metrics[i].value);
        EXPECT_EQ(metric_passes(back.metrics[i]), metric_passes(r.metrics[i])) << r.metrics[i].name;
        EXPECT_EQ(j.at("metrics")[i].at("pass").get<bool>(), metric_passes(r.metrics[i]));
    }
    EXPECT_EQ(back.status(), r.status());
    EXPECT_EQ(back.provenance, r.provenance);
    EXPECT_EQ(back.runtime_seconds, 1.5);
}

TEST(ReportTest, VerdictRecomputedFromStoredNumbers) {
    auto j = report_to_json(sample_report());
    j["metrics"][0]["pass"] = false;  // stale verdicts are ignored
    j["metrics"][1]["value"] = 9.0;
    const auto r = report_from_json(j);
    EXPECT_TRUE(metric_passes(r.metrics[0]));
    EXPECT_FALSE(metric_passes(r.metrics[1]));
    EXPECT_EQ(r.status(), ReportStatus::Fail);
}

TEST(ReportTest, NonFiniteValuesAsStrings) {
    ExperimentReport r;
    r.experiment_id = "x";
    r.add("a", std::numeric_limits<double>::infinity(), 1.0, 0.0, "a", Comparison::AtLeast);
    r.add("b", -std::numeric_limits<double>::infinity(), 0.0, 0.0, "b", Comparison::AtMost);
    r.add("c", std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0, "c", Comparison::AbsDiff);
    const auto j = report_to_json(r);
    EXPECT_EQ(j["metrics"][0]["value"], "inf");
    EXPECT_EQ(j["metrics"][1]["value"], "-inf");
    EXPECT_EQ(j["metrics"][2]["value"], "nan");
    const auto back = report_from_json(json::parse(j.dump()));
    EXPECT_TRUE(std::isinf(back.metrics[0].value));
    EXPECT_LT(back.metrics[1].value, 0.0);
    EXPECT_TRUE(std::isnan(back.metrics[2].value));
    EXPECT_EQ(back.failing_metrics(), std::vector<std::string>{"c"});
}

TEST(ReportTest, DeterministicModeDropsClockFields) {
    const auto j = report_to_json(sample_report(), {.deterministic = true});
    EXPECT_FALSE(j.contains("timestamp"));
    EXPECT_FALSE(j.contains("runtime_seconds"));
    EXPECT_EQ(j.dump(), report_to_json(sample_report(), {.deterministic = true}).dump());
}

TEST(ReportTest, SkippedRoundTrip) {
    const auto s = skipped_report("lss_convergence", {"gamma:1,1"}, "no stable limit");
    const auto back = report_from_json(report_to_json(s));
    EXPECT_TRUE(back.skipped);
    EXPECT_EQ(back.skip_reason, "no stable limit");
    EXPECT_EQ(back.status(), ReportStatus::Skipped);
}

TEST(ToleranceTest, ParseAndLookup) {
    Tolerances t;
    t.parse("slope=0.1");
    t.parse("sup=1e-7");
    EXPECT_TRUE(t.has("slope"));
    EXPECT_EQ(t.get("slope", 0.05), 0.1);
    EXPECT_EQ(t.get("sup", 1.0), 1e-7);
    EXPECT_EQ(t.get("other", 0.25), 0.25);
    EXPECT_THROW(t.parse("slope"), SpecError);
    EXPECT_THROW(t.parse("=1"), SpecError);
    EXPECT_THROW(t.parse("slope=abc"), SpecError);
    EXPECT_THROW(t.parse("slope=0.1x"), SpecError);
    EXPECT_THROW(t.parse("slope=-1"), SpecError);
    EXPECT_THROW(t.parse("slope=inf"), SpecError);
}

TEST(NumberFormatTest, TwelveDigitHelpers) {
    EXPECT_EQ(round12(0.1 + 0.2), 0.3);
    EXPECT_EQ(num12(1.0 / 3.0).get<double>(), 0.333333333333);
    EXPECT_EQ(from_num(json("inf")), std::numeric_limits<double>::infinity());
    EXPECT_THROW(from_num(json("huge")), SpecError);
    EXPECT_THROW(from_num(json::array()), SpecError);
}
