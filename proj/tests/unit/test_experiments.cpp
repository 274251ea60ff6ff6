#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include <levy/experiments.hpp>

using namespace levy;

namespace {

const Metric& metric(const ExperimentReport& r, const std::string& name) {
    for (const auto& m : r.metrics)
        if (m.name == name) return m;
    throw std::runtime_error("no metric " + name + " in " + r.experiment_id);
}

std::vector<const Metric*> metrics_with_prefix(const ExperimentReport& r, const std::string& prefix) {
    std::vector<const Metric*> out;
    for (const auto& m : r.metrics)
        if (m.name.rfind(prefix, 0) == 0) out.push_back(&m);
    return out;
}

void expect_self_contained(const ExperimentReport& r) {
    const auto back = report_from_json(json::parse(report_to_json(r).dump()));
    EXPECT_EQ(back.status(), r.status()) << r.experiment_id;
    EXPECT_EQ(back.failing_metrics(), r.failing_metrics()) << r.experiment_id;
}

}  // namespace

TEST(GridTest, GeometricDefault) {
    const auto g = default_t_grid();
    ASSERT_EQ(g.size(), 10u);
    EXPECT_EQ(g.front(), 0.5);
    EXPECT_DOUBLE_EQ(g.back(), std::ldexp(1.0, -10));
}

TEST(EntropySlopeTest, Wiener) {
    const auto r = entropy_slope(ProcessSpec::wiener(1.0, 0.0), default_t_grid());
    EXPECT_NEAR(metric(r, "slope").value, 0.5, 0.01);
    EXPECT_NEAR(metric(r, "intercept").value, 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e), 1e-4);
    EXPECT_EQ(r.status(), ReportStatus::Pass);
    expect_self_contained(r);
}

TEST(EntropySlopeTest, Cauchy) {
    const auto r = entropy_slope(ProcessSpec::sas(1.0, 1.0), default_t_grid());
    EXPECT_NEAR(metric(r, "slope").value, 1.0, 0.02);
    EXPECT_EQ(r.status(), ReportStatus::Pass);
}

TEST(EntropySlopeTest, ExactFamiliesAcrossGrids) {
    const std::vector<std::vector<double>> grids = {default_t_grid(), geometric_grid(0.9, 0.6, 10),
                                                    geometric_grid(0.3, 0.45, 8)};
    for (const auto& g : grids) {
        EXPECT_EQ(entropy_slope(ProcessSpec::wiener(2.0, 0.0), g).status(), ReportStatus::Pass);
        EXPECT_EQ(entropy_slope(ProcessSpec::sas(2.0, 0.5), g).status(), ReportStatus::Pass);
    }
}

TEST(EntropySlopeTest, IndexZeroSkipped) {
    const auto r = entropy_slope(ProcessSpec::gamma_process(1.0, 1.0), default_t_grid());
    EXPECT_EQ(r.status(), ReportStatus::Skipped);
    EXPECT_FALSE(r.skip_reason.empty());
}

TEST(LssConvergenceTest, StableIsExact) {
    const auto r = lss_convergence(ProcessSpec::sas(1.5, 1.0), 1.5, {1e-1, 1e-2, 1e-3});
    for (const auto* m : metrics_with_prefix(r, "sup_norm")) EXPECT_LE(m->value, 1e-8) << m->name;
    EXPECT_EQ(r.status(), ReportStatus::Pass);
}

TEST(LssConvergenceTest, LayeredDistancesDecrease) {
    const auto r = lss_convergence(ProcessSpec::layered_stable(0.8, 1.6, 1.0, 1.0), 0.8, {1e-1, 1e-2, 1e-3});
    const auto changes = metrics_with_prefix(r, "sup_norm_change");
    ASSERT_EQ(changes.size(), 2u);
    for (const auto* m : changes) EXPECT_LT(m->value, 0.0) << m->name;
    EXPECT_EQ(r.status(), ReportStatus::Pass);
    expect_self_contained(r);
}

TEST(LssConvergenceTest, GammaRefused) {
    const auto r = lss_convergence(ProcessSpec::gamma_process(1.0, 1.0), 0.0, {0.1});
    EXPECT_EQ(r.status(), ReportStatus::Skipped);
}

TEST(UpperBoundTest, GammaDivergesFasterThanLog) {
    const auto r = upper_bound_check(ProcessSpec::gamma_process(1.0, 1.0), 0.5, {0.1, 0.05, 0.02, 0.01});
    const auto& ratio = metric(r, "entropy_log_ratio[t=0.01]");
    EXPECT_LT(ratio.value, -10.0);
    const double oracle = gamma_entropy_closed_form(1.0, 1.0, 0.01) / std::log(100.0);
    EXPECT_NEAR(ratio.value, oracle, 1e-9);
}

TEST(UpperBoundTest, CauchyWithProbeAboveIndex) {
    const auto r = upper_bound_check(ProcessSpec::sas(1.0, 1.0), 1.2, {0.1, 0.05, 0.02, 0.01, 0.001});
    EXPECT_EQ(r.status(), ReportStatus::Pass);
    EXPECT_THROW(upper_bound_check(ProcessSpec::sas(1.0, 1.0), 0.9, {0.1, 0.01}), SpecError);
}

TEST(InequalitySuiteTest, WienerAndGamma) {
    const std::vector<int> nm = {1, 2, 4, 8};
    for (const auto& s : {ProcessSpec::wiener(1.0), ProcessSpec::gamma_process(1.0, 1.0)}) {
        const auto r = inequality_suite(s, nm, nm);
        EXPECT_EQ(r.status(), ReportStatus::Pass) << s.id();
        for (const auto& m : r.metrics) EXPECT_GE(m.value, -2e-4) << s.id() << " " << m.name;
        expect_self_contained(r);
    }
}

TEST(InequalitySuiteTest, SingleCellCollapses) {
    const auto r = inequality_suite(ProcessSpec::wiener(1.0), {1}, {1});
    // with n = m = 1 every two-sided chain reduces to H_{1,1} against itself
    for (const char* name : {"min_slack:refinement_lower", "min_slack:refinement_upper", "min_slack:time_lower",
                             "min_slack:time_upper", "min_slack:joint_lower", "min_slack:joint_upper"})
        EXPECT_EQ(metric(r, name).value, 0.0) << name;
    EXPECT_GT(metric(r, "min_slack:refinement_nonnegative").value, 0.0);
}

TEST(MonotonicityTest, BuiltinsPass) {
    const std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    for (const auto& s : {ProcessSpec::wiener(1.0), ProcessSpec::laplace(1.0), ProcessSpec::tempered_stable(1.2, 1, 1, 1)})
        EXPECT_EQ(monotonicity_check(s, grid).status(), ReportStatus::Pass) << s.id();
}

TEST(RenyiCheckTest, GapShrinksForExactFamilies) {
    std::vector<int> ms;
    for (int m = 16; m <= 4096; m *= 2) ms.push_back(m);
    for (const auto& s : {ProcessSpec::wiener(1.0), ProcessSpec::gamma_process(1.0, 1.0), ProcessSpec::sas(1.0, 1.0)}) {
        const auto r = renyi_check(s, 1.0, ms);
        EXPECT_EQ(r.status(), ReportStatus::Pass) << s.id();
        EXPECT_LT(std::abs(metric(r, "gap[m=4096]").value), 1e-3);
    }
}

TEST(RenyiCheckTest, SizeCheckOptional) {
    const auto r = renyi_check(ProcessSpec::gamma_process(1.0, 1.0), 0.5, {16, 32}, {}, false);
    EXPECT_TRUE(metrics_with_prefix(r, "gap[").empty());
    EXPECT_EQ(r.status(), ReportStatus::Pass);
}

TEST(GammaAsymptoticsTest, DensityPathAndGapTrend) {
    const auto r = gamma_asymptotics(ProcessSpec::gamma_process(1.0, 1.0));
    for (const auto* m : metrics_with_prefix(r, "density_entropy")) EXPECT_TRUE(metric_passes(*m)) << m->name;
    for (const auto* m : metrics_with_prefix(r, "asymptotic_gap_change")) EXPECT_TRUE(metric_passes(*m)) << m->name;
    EXPECT_EQ(gamma_asymptotics(ProcessSpec::wiener(1.0)).status(), ReportStatus::Skipped);
}

TEST(MomentsCheckTest, StableAgreesAndNonSamplableSkipped) {
    ExperimentConfig cfg;
    cfg.mc_draws = 200000;
    const auto r = moments_check(ProcessSpec::sas(1.5, 1.0), 0.5, {1.0, 0.1, 0.01}, cfg);
    EXPECT_EQ(r.status(), ReportStatus::Pass);
    EXPECT_EQ(moments_check(ProcessSpec::layered_stable(0.8, 1.6, 1, 1), 0.0, {1.0}).status(), ReportStatus::Skipped);
    EXPECT_EQ(moments_check(ProcessSpec::gamma_process(1.0, 1.0), 0.0, {1.0}).status(), ReportStatus::Skipped);
}

TEST(HierarchyTest, OrderingAndIndices) {
    const std::vector<ProcessSpec> specs = {ProcessSpec::wiener(1.0), ProcessSpec::sas(1.0, 1.0),
                                            ProcessSpec::sas(0.5, 1.0), ProcessSpec::gamma_process(1.0, 1.0),
                                            ProcessSpec::laplace(1.0)};
    const auto r = hierarchy_table(specs, 0.01);
    EXPECT_EQ(r.status(), ReportStatus::Pass);
    EXPECT_EQ(metrics_with_prefix(r, "ordering:").size(), 3u);
    const auto rows = hierarchy_rows(specs, 0.01);
    ASSERT_EQ(rows.size(), specs.size());
    // index-0 rows first
    EXPECT_EQ(rows[0].beta_hat, 0.0);
    EXPECT_EQ(rows[1].beta_hat, 0.0);
    EXPECT_TRUE(rows[0].family == "laplace" || rows[0].family == "gamma");
    EXPECT_EQ(rows.back().family, "wiener");
    std::ostringstream os;
    write_hierarchy_csv(os, rows);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "family,spec_id,beta_hat,beta,slope,entropy");
}

TEST(HierarchyTest, ScaleChangesInterceptOnly) {
    const auto rows = hierarchy_rows({ProcessSpec::sas(1.5, 1.0), ProcessSpec::sas(1.5, 4.0)}, 0.01);
    EXPECT_NEAR(rows[0].slope, rows[1].slope, 1e-6);
    // γ scales X by γ^{1/α}
    EXPECT_NEAR(std::abs(rows[0].entropy - rows[1].entropy), std::log(4.0) / 1.5, 1e-6);
}

TEST(SuiteTest, NamesAndSkips) {
    EXPECT_THROW(run_suite("nonsense", {ProcessSpec::wiener(1.0)}), SpecError);
    const auto lss = run_suite("lss", {ProcessSpec::gamma_process(1.0, 1.0)});
    ASSERT_EQ(lss.size(), 1u);
    EXPECT_EQ(lss[0].status(), ReportStatus::Skipped);
    const auto gauss = run_suite("gaussian", {ProcessSpec::wiener(1.0), ProcessSpec::laplace(1.0)});
    ASSERT_EQ(gauss.size(), 2u);
    EXPECT_EQ(gauss[0].status(), ReportStatus::Pass);
    EXPECT_EQ(gauss[1].status(), ReportStatus::Skipped);
}

TEST(SuiteTest, IndependentOfThreadCount) {
    ExperimentConfig one, three;
    three.threads = 3;
    const std::vector<ProcessSpec> specs = {ProcessSpec::wiener(1.0), ProcessSpec::sas(1.5, 1.0)};
    for (const char* suite : {"inequality"}) {
        const auto a = run_suite(suite, specs, one), b = run_suite(suite, specs, three);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            EXPECT_EQ(report_to_json(a[i], {.deterministic = true}).dump(),
                      report_to_json(b[i], {.deterministic = true}).dump())
                << suite;
    }
}
