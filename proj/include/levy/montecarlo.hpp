#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "process_model.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace levy {

struct SampleBatch {
    std::string spec_id;
    double t = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> values;
};

inline bool is_samplable(const ProcessSpec& spec) {
    switch (spec.family()) {
        case Family::Wiener:
        case Family::SaS:
        case Family::Gamma:
        case Family::Laplace: return true;
        default: return false;
    }
}

namespace detail {

inline double std_normal(CounterRng& rng) {
    const double u = rng.uniform(), v = rng.uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

/// Gamma(shape, 1): Marsaglia–Tsang squeeze, with Gamma(a) = Gamma(a+1)·U^{1/a} for a < 1.
inline double std_gamma(CounterRng& rng, double shape) {
    if (shape < 1.0) {
        const double g = std_gamma(rng, shape + 1.0);
        const double u = rng.uniform();
        return g * std::exp(std::log(u) / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = std_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

/// Symmetric stable with Φ = exp(-|ξ|^α) (Chambers–Mallows–Stuck).
inline double std_symmetric_stable(CounterRng& rng, double alpha) {
    const double v = std::numbers::pi * (rng.uniform() - 0.5);
    if (alpha == 1.0) return std::tan(v);
    const double w = -std::log(rng.uniform());
    return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

/// One draw of L_t from its own sub-stream.
inline double draw_increment(const ProcessSpec& spec, double t, CounterRng& rng) {
    switch (spec.family()) {
        case Family::Wiener: {
            const auto& p = spec.as<WienerParams>();
            return p.mu * t + std::sqrt(p.sigma2 * t) * std_normal(rng);
        }
        case Family::SaS: {
            const auto& p = spec.as<SaSParams>();
            return std::pow(p.gamma * t, 1.0 / p.alpha) * std_symmetric_stable(rng, p.alpha);
        }
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            return p.theta * std_gamma(rng, p.tau * t);
        }
        case Family::Laplace: {
            const double s = spec.as<LaplaceParams>().scale;
            return s * (std_gamma(rng, t) - std_gamma(rng, t));
        }
        default: break;
    }
    throw UnsupportedFamilyError(std::string("sample_increments: no sampler for ") + family_name(spec.family()));
}

/// Runs body(i) for i in [0, n) over `threads` workers on contiguous ranges.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, const Body& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, n / 4096))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        pool.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// count i.i.d. draws of L_t. Draw i depends only on (seed, spec, t, i), so the
/// batch does not depend on the thread count.
inline SampleBatch sample_increments(const ProcessSpec& spec, double t, std::size_t count, std::uint64_t seed,
                                     unsigned threads = 1) {
    if (!(t > 0.0) || !std::isfinite(t)) throw SpecError("sample_increments: t must be > 0");
    if (count == 0) throw SpecError("sample_increments: count must be positive");
    if (!is_samplable(spec))
        throw UnsupportedFamilyError(std::string("sample_increments: no sampler for ") + family_name(spec.family()));
    SampleBatch b;
    b.spec_id = spec.id();
    b.t = t;
    b.seed = seed;
    b.values.resize(count);
    const auto key = stream_key(seed, spec.hash(), t);
    detail::parallel_for(count, threads, [&](std::size_t i) {
        CounterRng rng(key, i);
        b.values[i] = detail::draw_increment(spec, t, rng);
    });
    return b;
}

struct PluginEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t occupied_bins = 0;
};

namespace detail {

inline double miller_madow(const std::vector<std::uint32_t>& counts, std::size_t n) {
    double h = 0.0;
    std::size_t occupied = 0;
    const double inv = 1.0 / static_cast<double>(n);
    for (auto c : counts) {
        if (c == 0) continue;
        ++occupied;
        const double p = c * inv;
        h -= p * std::log(p);
    }
    return h + (static_cast<double>(occupied) - 1.0) / (2.0 * static_cast<double>(n));
}

}  // namespace detail

/// Plug-in entropy of [X]_m with the Miller–Madow correction (K-1)/(2N); stderr from
/// a nonparametric bootstrap.
inline PluginEstimate plugin_discrete_entropy(const SampleBatch& batch, int m, int resamples = 100,
                                              std::uint64_t bootstrap_seed = 0) {
    if (m < 1) throw SpecError("plugin_discrete_entropy: m must be >= 1");
    const std::size_t n = batch.values.size();
    if (n < 1000) throw SpecError("plugin_discrete_entropy: need at least 1000 draws");
    std::unordered_map<std::int64_t, std::uint32_t> index;
    std::vector<std::uint32_t> bin_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::int64_t>(std::floor(batch.values[i] * m));
        auto [it, inserted] = index.try_emplace(k, static_cast<std::uint32_t>(index.size()));
        bin_of[i] = it->second;
    }
    std::vector<std::uint32_t> counts(index.size(), 0);
    for (auto b : bin_of) ++counts[b];
    PluginEstimate r;
    r.estimate = detail::miller_madow(counts, n);
    r.occupied_bins = index.size();
    if (resamples > 1) {
        const auto key = stream_key(bootstrap_seed ^ batch.seed, 0x626f6f74ULL, batch.t);
        double s = 0.0, s2 = 0.0;
        for (int b = 0; b < resamples; ++b) {
            std::fill(counts.begin(), counts.end(), 0u);
            CounterRng rng(key, static_cast<std::uint64_t>(b));
            for (std::size_t i = 0; i < n; ++i) ++counts[bin_of[rng.next() % n]];
            const double h = detail::miller_madow(counts, n);
            s += h;
            s2 += h * h;
        }
        const double mean = s / resamples;
        r.stderr_ = std::sqrt(std::max(0.0, (s2 - resamples * mean * mean) / (resamples - 1)));
    }
    return r;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function P(K > λ).
inline double kolmogorov_survival(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
inline KsResult ks_test(std::vector<double> values, const std::function<double(double)>& cdf) {
    if (values.empty()) throw SpecError("ks_test: empty sample");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = cdf(values[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

struct MomentEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;  ///< bootstrap standard error
    std::size_t count = 0;
};

/// E|t^{-1/β} L_t|^q by Monte Carlo.
inline MomentEstimate fractional_moment_empirical(const ProcessSpec& spec, double t, double beta, double q,
                                                  std::size_t count = 1000000, std::uint64_t seed = 1,
                                                  unsigned threads = 1, int resamples = 100) {
    if (!(beta > 0.0)) throw SpecError("fractional_moment_empirical: beta must be > 0");
    if (!(q > 0.0 && q < std::min(1.0, beta)))
        throw SpecError("fractional_moment_empirical: q must lie in (0, min(1, beta))");
    const auto batch = sample_increments(spec, t, count, seed, threads);
    const double scale = std::pow(t, -1.0 / beta);
    std::vector<double> v(count);
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        v[i] = std::pow(std::abs(scale * batch.values[i]), q);
        s += v[i];
    }
    MomentEstimate r;
    r.count = count;
    r.mean = s / static_cast<double>(count);
    const auto key = stream_key(seed, 0x6d6f6d ^ spec.hash(), t);
    double b1 = 0.0, b2 = 0.0;
    for (int b = 0; b < resamples; ++b) {
        CounterRng rng(key, static_cast<std::uint64_t>(b));
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) acc += v[rng.next() % count];
        const double mb = acc / static_cast<double>(count);
        b1 += mb;
        b2 += mb * mb;
    }
    const double mb = b1 / resamples;
    r.stderr_ = std::sqrt(std::max(0.0, (b2 - resamples * mb * mb) / (resamples - 1)));
    return r;
}

struct MomentIntegral {
    double value = 0.0;     ///< c_q · ∫ (1 - Re Φ(ξ)) / |ξ|^{q+1} dξ, or +inf when divergent
    double abs_err = 0.0;
    double c_q = 0.0;
    bool diverges = false;
    double local_exponent = 0.0;  ///< d log(1 - Re Φ)/d log ξ near ξ = 0
};

namespace detail {

/// 2∫_0^∞ (1 - Re Φ(ξ)) ξ^{-q-1} dξ for an even-in-real-part Φ.
template <class Phi>
quad::Result moment_integral(const Phi& one_minus_re_phi, double q) {
    quad::Options opt{1e-14, 1e-11, 4000};
    // (0, 1] in u = 1/ξ; (1, ∞) as 1/q minus the Re Φ part
    auto inner = [&](double u) {
        const double xi = 1.0 / u;
        return one_minus_re_phi(xi) * std::pow(xi, -q - 1.0) / (u * u);
    };
    auto r = quad::integrate_log_to_infinity(inner, 1.0, opt, 200);
    auto outer = [&](double xi) { return (1.0 - one_minus_re_phi(xi)) * std::pow(xi, -q - 1.0); };
    auto far = quad::integrate_log_to_infinity(outer, 1.0, opt, 200);
    r.value += 1.0 / q - far.value;
    r.abs_err += far.abs_err;
    r.converged = r.converged && far.converged;
    r.value *= 2.0;
    r.abs_err *= 2.0;
    return r;
}

/// 1 - Re exp(z) without cancellation for small z.
inline double one_minus_re_exp(cplx z) {
    const double s = std::sin(0.5 * z.imag());
    return -std::expm1(z.real()) + std::exp(z.real()) * 2.0 * s * s;
}

}  // namespace detail

/// c_q such that c_q ∫ (1 - Re Φ_N(ξ))/|ξ|^{q+1} dξ = E|N(0,1)|^q.
inline double moment_constant(double q) {
    if (!(q > 0.0 && q < 2.0)) throw SpecError("moment_constant: q must lie in (0, 2)");
    const double target = std::pow(2.0, 0.5 * q) * std::tgamma(0.5 * (q + 1.0)) / std::sqrt(std::numbers::pi);
    const auto I = detail::moment_integral([](double xi) { return -std::expm1(-0.5 * xi * xi); }, q);
    return target / I.value;
}

/// E|t^{-1/β} L_t|^q through the characteristic-function identity with a
/// Gaussian-calibrated constant. Reports divergence when 1 - Re Φ vanishes at 0
/// no faster than |ξ|^q.
inline MomentIntegral fractional_moment_integral(const ProcessSpec& spec, double t, double beta, double q) {
    if (!(t > 0.0)) throw SpecError("fractional_moment_integral: t must be > 0");
    if (!(beta > 0.0)) throw SpecError("fractional_moment_integral: beta must be > 0");
    if (!(q > 0.0 && q < 2.0)) throw SpecError("fractional_moment_integral: q must lie in (0, 2)");
    const ExponentEvaluator psi(spec);
    const double s = std::pow(t, 1.0 / beta);
    auto f = [&](double xi) { return detail::one_minus_re_exp(t * psi(xi / s)); };
    MomentIntegral r;
    r.c_q = moment_constant(q);
    const double x1 = 1e-6, x2 = 2e-6;
    r.local_exponent = std::log(f(x2) / f(x1)) / std::log(x2 / x1);
    if (!(r.local_exponent > q + 1e-3)) {
        r.diverges = true;
        r.value = std::numeric_limits<double>::infinity();
        return r;
    }
    const auto I = detail::moment_integral(f, q);
    if (!I.converged) throw NumericalError("fractional_moment_integral: quadrature did not converge", I.value, I.abs_err);
    r.value = r.c_q * I.value;
    r.abs_err = r.c_q * I.abs_err;
    return r;
}

// ---------------------------------------------------------------------------
// export

inline constexpr std::array<char, 8> kSampleMagic = {'L', 'E', 'V', 'Y', 'S', 'M', 'P', 'L'};
inline constexpr std::uint32_t kSampleVersion = 1;

namespace detail {
template <class T>
void put_le(std::ostream& os, T v) {
    auto u = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((u >> (8 * i)) & 0xff));
}
template <class T>
T get_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<unsigned char>(is.get())) << (8 * i);
    if (!is) throw SpecError("sample file truncated");
    return std::bit_cast<T>(u);
}
}  // namespace detail

/// Header: 8-byte magic, u32 version, u32 reserved, u64 count, u64 seed; then float64 values.
inline void write_binary(std::ostream& os, const SampleBatch& b) {
    os.write(kSampleMagic.data(), kSampleMagic.size());
    detail::put_le<std::uint32_t>(os, kSampleVersion);
    detail::put_le<std::uint32_t>(os, 0);
    detail::put_le<std::uint64_t>(os, b.values.size());
    detail::put_le<std::uint64_t>(os, b.seed);
    for (double v : b.values) detail::put_le<double>(os, v);
}

inline SampleBatch read_binary(std::istream& is) {
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kSampleMagic) throw SpecError("not a sample file (bad magic)");
    if (detail::get_le<std::uint32_t>(is) != kSampleVersion) throw SpecError("unsupported sample file version");
    (void)detail::get_le<std::uint32_t>(is);
    SampleBatch b;
    const auto n = detail::get_le<std::uint64_t>(is);
    b.seed = detail::get_le<std::uint64_t>(is);
    b.values.resize(n);
    for (auto& v : b.values) v = detail::get_le<double>(is);
    return b;
}

inline void write_csv(std::ostream& os, const SampleBatch& b) {
    const auto old = os.precision(12);
    os << "index,value\n";
    for (std::size_t i = 0; i < b.values.size(); ++i) os << i << ',' << b.values[i] << '\n';
    os.precision(old);
}

}  // namespace levy
