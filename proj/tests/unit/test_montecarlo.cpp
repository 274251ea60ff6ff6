#include <cmath>
#include <complex>
#include <cstring>
#include <memory>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include <levy/entropy.hpp>
#include <levy/montecarlo.hpp>

using namespace levy;

namespace {

double phi(double x, double var) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * var)); }

double gaussian_unit_bin_entropy() {
    double h = 0.0;
    for (int k = -40; k < 40; ++k) {
        const double p = k >= 0 ? phi(-k, 1.0) - phi(-(k + 1), 1.0) : phi(k + 1, 1.0) - phi(k, 1.0);
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// CDF from cumulative cell masses of a density grid, linear inside a cell
std::function<double(double)> grid_cdf(const DensityGrid& g) {
    auto cum = std::make_shared<std::vector<double>>(g.size() + 1, 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) (*cum)[j + 1] = (*cum)[j] + g.values[j] * g.dx;
    const double lo = g.lower(), dx = g.dx;
    const double below = 0.5 * g.tail_mass;
    return [cum, lo, dx, below](double x) {
        const double u = (x - lo) / dx;
        if (u <= 0.0) return below;
        const auto n = cum->size() - 1;
        if (u >= static_cast<double>(n)) return below + cum->back();
        const auto i = static_cast<std::size_t>(u);
        return below + (*cum)[i] + (u - static_cast<double>(i)) * ((*cum)[i + 1] - (*cum)[i]);
    };
}

std::function<double(double)> reference_cdf(const ProcessSpec& s, double t) {
    if (has_closed_form_cdf(s)) return [s, t](double x) { return closed_form_cdf(s, t, x); };
    return grid_cdf(marginal_density(s, t));
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

TEST(SamplerTest, WienerVariance) {
    const auto b = sample_increments(ProcessSpec::wiener(1.0, 0.0), 0.25, 1000000, 7);
    const double mu = mean(b.values);
    double v = 0.0;
    for (double x : b.values) v += (x - mu) * (x - mu);
    EXPECT_NEAR(v / static_cast<double>(b.values.size() - 1), 0.25, 0.002);
}

TEST(SamplerTest, GammaMean) {
    const auto b = sample_increments(ProcessSpec::gamma_process(2.0, 3.0), 1.0, 1000000, 11);
    EXPECT_NEAR(mean(b.values), 6.0, 0.02);
    for (double x : b.values) ASSERT_GT(x, 0.0);
}

TEST(SamplerTest, StableEmpiricalCharacteristicFunction) {
    const auto b = sample_increments(ProcessSpec::sas(1.5, 1.0), 1.0, 1000000, 3);
    double re = 0.0;
    for (double x : b.values) re += std::cos(x);
    EXPECT_NEAR(re / static_cast<double>(b.values.size()), std::exp(-1.0), 0.005);
}

TEST(SamplerTest, SmallShapeGammaStaysPositive) {
    const auto b = sample_increments(ProcessSpec::gamma_process(1.0, 1.0), 0.01, 100000, 5);
    for (double x : b.values) ASSERT_GE(x, 0.0);
    EXPECT_NEAR(mean(b.values), 0.01, 0.003);
}

TEST(SamplerTest, UnsupportedFamilies) {
    EXPECT_THROW(sample_increments(ProcessSpec::layered_stable(0.8, 1.6, 1, 1), 1.0, 10, 1), UnsupportedFamilyError);
    EXPECT_THROW(sample_increments(ProcessSpec::tempered_stable(1.2, 1, 1, 1), 1.0, 10, 1), UnsupportedFamilyError);
    EXPECT_THROW(sample_increments(ProcessSpec::wiener(1.0), 0.0, 10, 1), SpecError);
    EXPECT_THROW(sample_increments(ProcessSpec::wiener(1.0), 1.0, 0, 1), SpecError);
}

TEST(SamplerProperty, BitIdenticalAcrossCallsAndThreads) {
    for (const auto& s : {ProcessSpec::wiener(1.0), ProcessSpec::sas(0.5, 1.0), ProcessSpec::gamma_process(1.0, 0.3),
                          ProcessSpec::laplace(2.0)}) {
        const auto a = sample_increments(s, 0.5, 50000, 42, 1);
        const auto b = sample_increments(s, 0.5, 50000, 42, 4);
        const auto c = sample_increments(s, 0.5, 50000, 43, 1);
        ASSERT_EQ(a.values.size(), b.values.size());
        EXPECT_EQ(0, std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double))) << s.id();
        EXPECT_NE(a.values, c.values) << s.id();
        EXPECT_EQ(a.spec_id, s.id());
    }
}

TEST(SamplerProperty, KolmogorovSmirnovAgainstDensityModule) {
    const std::vector<std::pair<ProcessSpec, double>> cases = {
        {ProcessSpec::wiener(1.0, 0.3), 1.0}, {ProcessSpec::gamma_process(1.0, 1.0), 0.5},
        {ProcessSpec::gamma_process(2.0, 3.0), 1.0}, {ProcessSpec::laplace(1.0), 1.0},
        {ProcessSpec::laplace(1.0), 2.0}, {ProcessSpec::sas(1.0, 1.0), 1.0}};
    for (const auto& [s, t] : cases) {
        const auto cdf = reference_cdf(s, t);
        for (std::uint64_t seed : {1u, 2u}) {
            const auto r = ks_test(sample_increments(s, t, 100000, seed).values, cdf);
            EXPECT_GT(r.p_value, 0.001) << s.id() << " t=" << t << " seed=" << seed << " D=" << r.statistic;
        }
    }
}

TEST(SamplerProperty, IncrementsAdd) {
    const std::vector<ProcessSpec> specs = {ProcessSpec::wiener(1.0), ProcessSpec::gamma_process(1.0, 1.0),
                                            ProcessSpec::laplace(1.0), ProcessSpec::sas(1.0, 1.0)};
    for (const auto& s : specs) {
        const double t = 0.5;
        const auto a = sample_increments(s, t, 100000, 100), b = sample_increments(s, t, 100000, 200);
        std::vector<double> sum(a.values.size());
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = a.values[i] + b.values[i];
        const auto r = ks_test(sum, reference_cdf(s, 2.0 * t));
        EXPECT_GT(r.p_value, 0.001) << s.id();
    }
}

TEST(KsTest, DetectsWrongLaw) {
    const auto b = sample_increments(ProcessSpec::wiener(1.0), 1.0, 100000, 9);
    EXPECT_LT(ks_test(b.values, [](double x) { return phi(x, 1.2); }).p_value, 1e-6);
    EXPECT_THROW(ks_test({}, [](double) { return 0.0; }), SpecError);
}

TEST(PluginEntropyTest, ConstantBatch) {
    SampleBatch b;
    b.values.assign(5000, 0.37);
    const auto r = plugin_discrete_entropy(b, 4);
    EXPECT_EQ(r.estimate, 0.0);
    EXPECT_EQ(r.occupied_bins, 1u);
}

TEST(PluginEntropyTest, FairCoin) {
    SampleBatch b;
    b.seed = 17;
    CounterRng rng(99, 0);
    for (int i = 0; i < 20000; ++i) b.values.push_back(rng.uniform() < 0.5 ? 0.5 : 1.5);
    const auto r = plugin_discrete_entropy(b, 1);
    EXPECT_EQ(r.occupied_bins, 2u);
    EXPECT_GT(r.stderr_, 0.0);
    EXPECT_NEAR(r.estimate, std::log(2.0), 3.0 * r.stderr_ + 1e-4);
}

TEST(PluginEntropyTest, WienerUnitBinsMatchCdfOracle) {
    const auto b = sample_increments(ProcessSpec::wiener(1.0, 0.0), 1.0, 1000000, 2024);
    const auto r = plugin_discrete_entropy(b, 1);
    const double oracle = gaussian_unit_bin_entropy();
    EXPECT_NEAR(oracle, process_entropy(ProcessSpec::wiener(1.0, 0.0), 1, 1), 1e-10);
    EXPECT_NEAR(r.estimate, oracle, 3.0 * r.stderr_);
}

TEST(PluginEntropyTest, Preconditions) {
    SampleBatch b;
    b.values.assign(999, 0.0);
    EXPECT_THROW(plugin_discrete_entropy(b, 1), SpecError);
    b.values.assign(1000, 0.0);
    EXPECT_THROW(plugin_discrete_entropy(b, 0), SpecError);
}

TEST(FractionalMomentTest, StableIsTimeInvariant) {
    std::vector<MomentEstimate> est;
    for (double t : {1.0, 0.1, 0.01}) est.push_back(fractional_moment_empirical(ProcessSpec::sas(1.5, 1.0), t, 1.5, 0.5));
    for (std::size_t i = 1; i < est.size(); ++i) {
        const double se = std::hypot(est[0].stderr_, est[i].stderr_);
        EXPECT_NEAR(est[i].mean, est[0].mean, 3.0 * se);
    }
}

TEST(FractionalMomentTest, GaussianAgainstQuadrature) {
    boost::math::quadrature::exp_sinh<double> es;
    const double oracle = 2.0 * es.integrate([](double x) {
        return std::sqrt(x) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    }, 0.0, std::numeric_limits<double>::infinity());
    ASSERT_NEAR(oracle, std::pow(2.0, 0.25) * std::tgamma(0.75) / std::sqrt(std::numbers::pi), 1e-10);
    const auto e = fractional_moment_empirical(ProcessSpec::wiener(1.0, 0.0), 0.3, 2.0, 0.5);
    EXPECT_NEAR(e.mean, oracle, 3.0 * e.stderr_);
    const auto i = fractional_moment_integral(ProcessSpec::wiener(1.0, 0.0), 1.0, 2.0, 0.5);
    EXPECT_NEAR(i.value, oracle, 1e-6);
}

TEST(FractionalMomentTest, GammaExcludedByPrecondition) {
    EXPECT_THROW(fractional_moment_empirical(ProcessSpec::gamma_process(1.0, 1.0), 0.1, 0.0, 0.5), SpecError);
    EXPECT_THROW(fractional_moment_empirical(ProcessSpec::sas(1.5, 1.0), 0.1, 1.5, 1.2), SpecError);
}

TEST(FractionalMomentTest, IntegralCalibrationSelfCheck) {
    for (double q : {0.1, 0.5, 0.9}) {
        const double target = std::pow(2.0, 0.5 * q) * std::tgamma(0.5 * (q + 1.0)) / std::sqrt(std::numbers::pi);
        // t^{-1/2} L_t is N(0, σ²) whatever t is
        EXPECT_NEAR(fractional_moment_integral(ProcessSpec::wiener(1.0, 0.0), 0.25, 2.0, q).value, target, 1e-6)
            << "q=" << q;
    }
}

TEST(FractionalMomentTest, IntegralAgreesWithMonteCarlo) {
    const auto s = ProcessSpec::sas(1.5, 1.0);
    const auto e = fractional_moment_empirical(s, 0.1, 1.5, 0.5);
    const auto i = fractional_moment_integral(s, 0.1, 1.5, 0.5);
    EXPECT_FALSE(i.diverges);
    EXPECT_NEAR(i.value, e.mean, 3.0 * e.stderr_);
}

TEST(FractionalMomentTest, IntegralReportsDivergence) {
    const auto i = fractional_moment_integral(ProcessSpec::sas(1.5, 1.0), 1.0, 1.5, 1.7);
    EXPECT_TRUE(i.diverges);
    EXPECT_TRUE(std::isinf(i.value));
}

TEST(RngTest, UniformIsOpenAndStreamsDiffer) {
    CounterRng rng(stream_key(1, 2, 0.5), 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
    EXPECT_NE(stream_key(1, 2, 0.5), stream_key(1, 2, 0.25));
    EXPECT_NE(stream_key(1, 2, 0.5), stream_key(2, 2, 0.5));
    CounterRng a(5, 7), b(5, 7);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(ExportTest, BinaryRoundTrip) {
    const auto b = sample_increments(ProcessSpec::laplace(1.0), 0.3, 1000, 77);
    std::stringstream ss;
    write_binary(ss, b);
    const std::string bytes = ss.str();
    ASSERT_EQ(bytes.size(), 32u + 8u * 1000u);
    EXPECT_EQ(bytes.substr(0, 8), "LEVYSMPL");
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);  // version, little-endian
    const auto r = read_binary(ss);
    EXPECT_EQ(r.seed, 77u);
    ASSERT_EQ(r.values.size(), b.values.size());
    EXPECT_EQ(0, std::memcmp(r.values.data(), b.values.data(), 8 * b.values.size()));
}

TEST(ExportTest, BinaryRejectsBadInput) {
    std::stringstream bad("NOTLEVY!xxxxxxxxxxxxxxxxxxxxxxxx");
    EXPECT_THROW(read_binary(bad), SpecError);
    SampleBatch b;
    b.values = {1.0, 2.0};
    std::stringstream ss;
    write_binary(ss, b);
    std::stringstream cut(ss.str().substr(0, ss.str().size() - 3));
    EXPECT_THROW(read_binary(cut), SpecError);
}

TEST(ExportTest, Csv) {
    SampleBatch b;
    b.values = {0.5, -1.25};
    std::ostringstream os;
    write_csv(os, b);
    EXPECT_EQ(os.str(), "index,value\n0,0.5\n1,-1.25\n");
}
