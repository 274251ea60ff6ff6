#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "special_functions.hpp"

namespace levy {

using cplx = std::complex<double>;

enum class Family { Wiener, SaS, Gamma, Laplace, LayeredStable, TemperedStable };

struct WienerParams {
    double sigma2 = 1.0;
    double mu = 0.0;
};
struct SaSParams {
    double alpha = 2.0;
    double gamma = 1.0;
};
struct GammaParams {
    double theta = 1.0;  // scale
    double tau = 1.0;    // shape per unit time
};
struct LaplaceParams {
    double scale = 1.0;
};
/// Lévy density a0 t^{-alpha0-1} on (0,1] and a_inf t^{-alpha_inf-1} on (1,∞), mirrored.
struct LayeredStableParams {
    double alpha0 = 0.8;
    double alpha_inf = 1.6;
    double a0 = 1.0;
    double a_inf = 1.0;
};
/// Lévy density c exp(-lambda |t|^p) / |t|^{alpha+1}.
struct TemperedStableParams {
    double alpha = 1.2;
    double p = 1.0;
    double lambda = 1.0;
    double c = 1.0;
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Wiener: return "wiener";
        case Family::SaS: return "sas";
        case Family::Gamma: return "gamma";
        case Family::Laplace: return "laplace";
        case Family::LayeredStable: return "layered_stable";
        case Family::TemperedStable: return "tempered_stable";
    }
    return "unknown";
}

inline Family family_from_name(const std::string& s) {
    for (auto f : {Family::Wiener, Family::SaS, Family::Gamma, Family::Laplace, Family::LayeredStable,
                   Family::TemperedStable})
        if (s == family_name(f)) return f;
    throw SpecError("unknown process family '" + s + "'");
}

namespace detail {
inline void require(bool ok, const std::string& msg) {
    if (!ok) throw SpecError(msg);
}
inline bool finite(double x) { return std::isfinite(x); }
}  // namespace detail

/// A Lévy process family together with validated parameters.
class ProcessSpec {
public:
    using Params = std::variant<WienerParams, SaSParams, GammaParams, LaplaceParams, LayeredStableParams,
                                TemperedStableParams>;

    static ProcessSpec wiener(double sigma2, double mu = 0.0) {
        detail::require(detail::finite(sigma2) && sigma2 > 0.0, "wiener: sigma2 must be > 0");
        detail::require(detail::finite(mu), "wiener: mu must be finite");
        return ProcessSpec(WienerParams{sigma2, mu});
    }
    static ProcessSpec sas(double alpha, double gamma) {
        detail::require(detail::finite(alpha) && alpha > 0.0 && alpha <= 2.0, "sas: alpha must lie in (0, 2]");
        detail::require(detail::finite(gamma) && gamma > 0.0, "sas: gamma must be > 0");
        return ProcessSpec(SaSParams{alpha, gamma});
    }
    static ProcessSpec gamma_process(double theta, double tau) {
        detail::require(detail::finite(theta) && theta > 0.0, "gamma: theta must be > 0");
        detail::require(detail::finite(tau) && tau > 0.0, "gamma: tau must be > 0");
        return ProcessSpec(GammaParams{theta, tau});
    }
    static ProcessSpec laplace(double scale) {
        detail::require(detail::finite(scale) && scale > 0.0, "laplace: scale must be > 0");
        return ProcessSpec(LaplaceParams{scale});
    }
    static ProcessSpec layered_stable(double alpha0, double alpha_inf, double a0, double a_inf) {
        detail::require(detail::finite(alpha0) && alpha0 > 0.0 && alpha0 < 2.0,
                        "layered_stable: alpha0 must lie in (0, 2)");
        detail::require(detail::finite(alpha_inf) && alpha_inf > 0.0, "layered_stable: alpha_inf must be > 0");
        detail::require(detail::finite(a0) && a0 > 0.0, "layered_stable: a0 must be > 0");
        detail::require(detail::finite(a_inf) && a_inf > 0.0, "layered_stable: a_inf must be > 0");
        return ProcessSpec(LayeredStableParams{alpha0, alpha_inf, a0, a_inf});
    }
    static ProcessSpec tempered_stable(double alpha, double p, double lambda, double c) {
        detail::require(detail::finite(alpha) && alpha > 0.0 && alpha < 2.0,
                        "tempered_stable: alpha must lie in (0, 2)");
        detail::require(detail::finite(p) && p > 0.0, "tempered_stable: p must be > 0");
        detail::require(detail::finite(lambda) && lambda > 0.0, "tempered_stable: lambda must be > 0");
        detail::require(detail::finite(c) && c > 0.0, "tempered_stable: c must be > 0");
        return ProcessSpec(TemperedStableParams{alpha, p, lambda, c});
    }

    Family family() const { return static_cast<Family>(params_.index()); }
    const Params& params() const { return params_; }

    template <class P>
    const P& as() const {
        return std::get<P>(params_);
    }

    /// Symmetric in law (Ψ real). True for every built-in family except gamma and
    /// Wiener with drift.
    bool symmetric() const {
        if (family() == Family::Gamma) return false;
        if (family() == Family::Wiener) return as<WienerParams>().mu == 0.0;
        return true;
    }

    /// Stable, deterministic identifier: family plus parameters in shortest
    /// round-trip form.
    std::string id() const {
        std::string out = family_name(family());
        char sep = ':';
        auto put = [&](double v) {
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, v);
            out += sep;
            out.append(buf, res.ptr);
            sep = ',';
        };
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, WienerParams>) put(p.sigma2), put(p.mu);
                if constexpr (std::is_same_v<T, SaSParams>) put(p.alpha), put(p.gamma);
                if constexpr (std::is_same_v<T, GammaParams>) put(p.theta), put(p.tau);
                if constexpr (std::is_same_v<T, LaplaceParams>) put(p.scale);
                if constexpr (std::is_same_v<T, LayeredStableParams>) put(p.alpha0), put(p.alpha_inf), put(p.a0), put(p.a_inf);
                if constexpr (std::is_same_v<T, TemperedStableParams>) put(p.alpha), put(p.p), put(p.lambda), put(p.c);
            },
            params_);
        return out;
    }

    /// 64-bit FNV-1a hash of id(); used to derive RNG streams.
    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : id()) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    friend bool operator==(const ProcessSpec& a, const ProcessSpec& b) { return a.id() == b.id(); }

private:
    explicit ProcessSpec(Params p) : params_(p) {}
    Params params_;
};

enum class ExponentMethod { ClosedForm, Quadrature, Table };

inline const char* method_name(ExponentMethod m) {
    switch (m) {
        case ExponentMethod::ClosedForm: return "closed_form";
        case ExponentMethod::Quadrature: return "quadrature";
        case ExponentMethod::Table: return "table";
    }
    return "unknown";
}

struct CharExponentEval {
    double xi = 0.0;
    cplx psi{0.0, 0.0};
    ExponentMethod method = ExponentMethod::ClosedForm;
    double abs_err = 0.0;
};

/// True for the families whose exponent is an integral over the Lévy measure.
inline bool needs_quadrature(const ProcessSpec& spec) {
    return spec.family() == Family::LayeredStable || spec.family() == Family::TemperedStable;
}

namespace detail {

/// Truncated Taylor series around a point (coefficients, not derivatives).
struct Jet {
    static constexpr int kOrder = 9;
    std::array<double, kOrder> c{};

    static Jet power(double t0, double r) {
        Jet j;
        double binom = 1.0;
        for (int n = 0; n < kOrder; ++n) {
            j.c[n] = binom * std::pow(t0, r - n);
            binom *= (r - n) / (n + 1);
        }
        return j;
    }
    Jet operator*(const Jet& o) const {
        Jet r;
        for (int n = 0; n < kOrder; ++n)
            for (int k = 0; k <= n; ++k) r.c[n] += c[k] * o.c[n - k];
        return r;
    }
    Jet scaled(double s) const {
        Jet r = *this;
        for (auto& v : r.c) v *= s;
        return r;
    }
    Jet exp() const {
        Jet e;
        e.c[0] = std::exp(c[0]);
        for (int n = 1; n < kOrder; ++n) {
            double s = 0.0;
            for (int k = 1; k <= n; ++k) s += k * c[k] * e.c[n - k];
            e.c[n] = s / n;
        }
        return e;
    }
    /// k-th derivative at the expansion point.
    double derivative(int k) const {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return c[k] * f;
    }
};

/// One-sided Lévy density of a symmetric pure-jump family: ν(dt) = q(|t|) dt.
/// Layered kernels switch expression at t = 1; `near` selects the (0,1] branch.
class JumpKernel {
public:
    explicit JumpKernel(const ProcessSpec& spec) : spec_(spec) {
        if (!needs_quadrature(spec)) throw UnsupportedFamilyError("jump kernel only for layered/tempered families");
    }

    double operator()(double t) const { return value(t, t <= 1.0); }

    double value(double t, bool near) const {
        if (spec_.family() == Family::LayeredStable) {
            const auto& p = spec_.as<LayeredStableParams>();
            return near ? p.a0 * std::pow(t, -p.alpha0 - 1.0) : p.a_inf * std::pow(t, -p.alpha_inf - 1.0);
        }
        const auto& p = spec_.as<TemperedStableParams>();
        return p.c * std::exp(-p.lambda * std::pow(t, p.p)) * std::pow(t, -p.alpha - 1.0);
    }

    Jet jet(double t, bool near) const {
        if (spec_.family() == Family::LayeredStable) {
            const auto& p = spec_.as<LayeredStableParams>();
            return near ? Jet::power(t, -p.alpha0 - 1.0).scaled(p.a0)
                        : Jet::power(t, -p.alpha_inf - 1.0).scaled(p.a_inf);
        }
        const auto& p = spec_.as<TemperedStableParams>();
        const Jet damping = Jet::power(t, p.p).scaled(-p.lambda).exp();
        return (damping * Jet::power(t, -p.alpha - 1.0)).scaled(p.c);
    }

    /// Index of the power law near zero, i.e. q(t) ~ a t^{-near_index-1}.
    double near_index() const {
        return spec_.family() == Family::LayeredStable ? spec_.as<LayeredStableParams>().alpha0
                                                       : spec_.as<TemperedStableParams>().alpha;
    }

private:
    ProcessSpec spec_;
};

/// ∫_x^∞ cos(ωt) f(t) dt from the derivatives of f at x (repeated integration by
/// parts; valid when ωx is large relative to the scale of f).
inline std::pair<double, double> oscillatory_tail(const Jet& f, double x, double omega) {
    const double s = std::sin(omega * x), c = std::cos(omega * x);
    // term signs cycle (-, -, +, +) and alternate between sin and cos
    double v = 0.0, wk = omega;
    constexpr int terms = Jet::kOrder - 1;
    for (int k = 0; k < terms; ++k) {
        const double sign = (k % 4 < 2) ? -1.0 : 1.0;
        v += sign * f.derivative(k) * ((k % 2 == 0) ? s : c) / wk;
        wk *= omega;
    }
    const double err = std::abs(f.derivative(terms)) / wk;
    return {v, err};
}

inline constexpr double kOscillationCut = 64.0 * std::numbers::pi;

/// ∫_0^∞ (cos(ωt) - 1) q(t) dt for ω > 0. The (0,1] piece is integrated in u = ωt;
/// beyond u = kOscillationCut the oscillatory part is taken from endpoint expansions.
inline quad::Result half_line_exponent(const JumpKernel& q, double omega) {
    // every piece below is sign-definite, so a purely relative tolerance is safe
    quad::Options opt{0.0, 1e-13, 4000};
    quad::Result out;
    const double A = kOscillationCut;

    auto cosm1 = [](double u) {
        const double s = std::sin(0.5 * u);
        return -2.0 * s * s;
    };

    // --- near piece, t in (0, 1] ---
    const double u_end = std::min(omega, A);
    const double u_first = std::min(std::numbers::pi, u_end);
    const double u_min = 1e-8 * u_first;
    auto near_u = [&](double u) { return cosm1(u) * q.value(u / omega, true) / omega; };
    {
        // [0, u_min]: cos u - 1 = -u²/2 + u⁴/24 - ... against a locally power-law q
        const double t_min = u_min / omega;
        const Jet j = q.jet(t_min, true);
        const double kappa = t_min * j.derivative(1) / j.derivative(0);
        const double kappa_lo = [&] {
            const Jet jl = q.jet(0.1 * t_min, true);
            return 0.1 * t_min * jl.derivative(1) / jl.derivative(0);
        }();
        const double rem = j.derivative(0) / omega *
                           (-0.5 * std::pow(u_min, 3) / (3.0 + kappa) + std::pow(u_min, 5) / (24.0 * (5.0 + kappa)));
        out.value += rem;
        out.abs_err += std::abs(rem) * (std::abs(kappa - kappa_lo) + std::pow(u_min, 4) / 360.0);
    }
    out += quad::integrate_log(near_u, u_min, u_first, opt);
    for (double u0 = u_first; u0 < u_end; u0 += std::numbers::pi)
        out += quad::integrate(near_u, u0, std::min(u0 + std::numbers::pi, u_end), opt);

    if (omega > A) {
        const double t0 = A / omega;
        out += quad::integrate_log([&](double t) { return -q.value(t, true); }, t0, 1.0, opt);
        const auto lo = oscillatory_tail(q.jet(t0, true), t0, omega);
        const auto hi = oscillatory_tail(q.jet(1.0, true), 1.0, omega);
        out.value += lo.first - hi.first;
        out.abs_err += lo.second + hi.second;
    }

    // --- far piece, t in (1, ∞) ---
    auto far_t = [&](double t) { return cosm1(omega * t) * q.value(t, false); };
    const double T = std::max(1.0, A / omega);
    if (T > 1.0) {
        const double period = std::numbers::pi / omega;
        double a = 1.0;
        while (a < T && a < period) {
            const double b = std::min({2.0 * a, T, period});
            out += quad::integrate(far_t, a, b, opt);
            a = b;
        }
        while (a < T) {
            const double b = std::min(a + period, T);
            out += quad::integrate(far_t, a, b, opt);
            a = b;
        }
    }
    auto tail_mass = quad::integrate_log_to_infinity([&](double t) { return q.value(t, false); }, T, opt);
    out.value -= tail_mass.value;
    out.abs_err += tail_mass.abs_err;
    out.converged = out.converged && tail_mass.converged;
    out.evaluations += tail_mass.evaluations;
    const auto osc = oscillatory_tail(q.jet(T, false), T, omega);
    out.value += osc.first;
    out.abs_err += osc.second;
    return out;
}

}  // namespace detail

/// Ψ(ξ) for the given process. Closed form for Wiener/SaS/Gamma/Laplace, adaptive
/// quadrature of 2∫_0^∞ (cos(tξ) - 1) q(t) dt for layered and tempered stable.
inline CharExponentEval char_exponent(const ProcessSpec& spec, double xi) {
    if (!std::isfinite(xi)) throw SpecError("char_exponent: xi must be finite");
    CharExponentEval r;
    r.xi = xi;
    if (xi == 0.0) return r;
    switch (spec.family()) {
        case Family::Wiener: {
            const auto& p = spec.as<WienerParams>();
            r.psi = cplx(-0.5 * p.sigma2 * xi * xi, p.mu * xi);
            return r;
        }
        case Family::SaS: {
            const auto& p = spec.as<SaSParams>();
            r.psi = -p.gamma * std::pow(std::abs(xi), p.alpha);
            return r;
        }
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            // Φ_{L_1} = (1 - iθξ)^{-τ}
            r.psi = -p.tau * std::log(cplx(1.0, -p.theta * xi));
            return r;
        }
        case Family::Laplace: {
            const double s = spec.as<LaplaceParams>().scale * xi;
            r.psi = -std::log1p(s * s);
            return r;
        }
        case Family::LayeredStable:
        case Family::TemperedStable: {
            const detail::JumpKernel q(spec);
            const auto res = detail::half_line_exponent(q, std::abs(xi));
            r.psi = 2.0 * res.value;
            r.abs_err = 2.0 * res.abs_err;
            r.method = ExponentMethod::Quadrature;
            const double tol = std::max(1e-10, 1e-12 * std::abs(r.psi));
            if (!res.converged || !(r.abs_err <= tol))
                throw NumericalError("char_exponent: quadrature did not reach tolerance", r.psi.real(), r.abs_err);
            return r;
        }
    }
    return r;
}

/// Φ_{L_t}(ξ) = exp(tΨ(ξ)).
inline cplx char_function(const ProcessSpec& spec, double t, double xi) {
    if (!(t > 0.0) || !std::isfinite(t)) throw SpecError("char_function: t must be > 0");
    return std::exp(t * char_exponent(spec, xi).psi);
}

/// Lévy density ν(dx)/dx at x != 0 (symmetric families with jumps); zero for Wiener.
inline double levy_density(const ProcessSpec& spec, double x) {
    const double a = std::abs(x);
    switch (spec.family()) {
        case Family::Wiener: return 0.0;
        case Family::SaS: {
            const auto& p = spec.as<SaSParams>();
            if (p.alpha == 2.0) return 0.0;
            const double c = p.gamma * std::tgamma(1.0 + p.alpha) * std::sin(0.5 * std::numbers::pi * p.alpha) /
                             std::numbers::pi;
            return c * std::pow(a, -1.0 - p.alpha);
        }
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            return x > 0.0 ? p.tau * std::exp(-x / p.theta) / x : 0.0;
        }
        case Family::Laplace: {
            const auto& p = spec.as<LaplaceParams>();
            return std::exp(-a / p.scale) / a;
        }
        case Family::LayeredStable:
        case Family::TemperedStable: return detail::JumpKernel(spec)(a);
    }
    return 0.0;
}

/// Constant γ of the stable limit: Ψ(ξ) ~ -γ|ξ|^β as |ξ| → ∞. Closed form of
/// a ∫_R (1 - cos u)/|u|^{β+1} du for the pure-jump families; zero when β = 0.
inline double stable_limit_constant(const ProcessSpec& spec) {
    auto jump_integral = [](double alpha) {
        if (alpha == 1.0) return std::numbers::pi;
        return 2.0 * std::tgamma(1.0 - alpha) * std::cos(0.5 * std::numbers::pi * alpha) / alpha;
    };
    switch (spec.family()) {
        case Family::Wiener: return 0.5 * spec.as<WienerParams>().sigma2;
        case Family::SaS: return spec.as<SaSParams>().gamma;
        case Family::LayeredStable: {
            const auto& p = spec.as<LayeredStableParams>();
            return p.a0 * jump_integral(p.alpha0);
        }
        case Family::TemperedStable: {
            const auto& p = spec.as<TemperedStableParams>();
            return p.c * jump_integral(p.alpha);
        }
        default: return 0.0;
    }
}

/// Exact Blumenthal–Getoor index where the family determines it.
inline double nominal_bg_index(const ProcessSpec& spec) {
    switch (spec.family()) {
        case Family::Wiener: return 2.0;
        case Family::SaS: return spec.as<SaSParams>().alpha;
        case Family::LayeredStable: return spec.as<LayeredStableParams>().alpha0;
        case Family::TemperedStable: return spec.as<TemperedStableParams>().alpha;
        default: return 0.0;
    }
}

struct SectorCheck {
    bool satisfied = true;
    double c_hat = 0.0;
    std::string diagnostic;
};

/// Sup of |Im Ψ|/|Re Ψ| over the grid (|ξ| >= 1 required).
inline SectorCheck check_sector(const ProcessSpec& spec, std::span<const double> xi_grid) {
    if (xi_grid.empty()) throw SpecError("check_sector: xi grid must be nonempty");
    SectorCheck out;
    for (double xi : xi_grid) {
        if (!(std::abs(xi) >= 1.0)) throw SpecError("check_sector: grid points must satisfy |xi| >= 1");
        const cplx psi = char_exponent(spec, xi).psi;
        const double re = std::abs(psi.real()), im = std::abs(psi.imag());
        if (re == 0.0) {
            if (im != 0.0) {
                out.satisfied = false;
                out.c_hat = std::numeric_limits<double>::infinity();
                std::ostringstream os;
                os << "Re Psi vanishes with Im Psi != 0 at xi = " << xi;
                out.diagnostic = os.str();
                return out;
            }
            continue;
        }
        out.c_hat = std::max(out.c_hat, im / re);
    }
    out.satisfied = std::isfinite(out.c_hat);
    return out;
}

struct BGIndexEstimate {
    double beta_hat = 0.0;
    double xi_min = 1e3;
    double xi_max = 1e6;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    double raw_slope = 0.0;  ///< plain log-log least-squares slope over the window
};

struct BGOptions {
    double xi_min = 1e3;
    double xi_max = 1e6;
    int points = 64;
    double zero_threshold = 0.02;
};

namespace detail {
struct LineFit {
    double slope = 0.0, intercept = 0.0, r_squared = 0.0, slope_stderr = 0.0, intercept_stderr = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r_squared = syy > 0 ? 1.0 - sse / syy : 1.0;
    if (n > 2 && sxx > 0) {
        const double s2 = sse / (n - 2);
        f.slope_stderr = std::sqrt(s2 / sxx);
        f.intercept_stderr = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return f;
}
}  // namespace detail

/// Blumenthal–Getoor index from the growth of |Ψ| on a geometric window.
///
/// The plain log-log slope is reported as raw_slope. Logarithmic growth
/// (β = 0) shows up as a local slope ~ 1/log ξ, so beta_hat is the local slope
/// extrapolated to 1/log ξ → 0 with a quadratic fit, clamped to [0, 2] and set
/// to zero below zero_threshold.
inline BGIndexEstimate estimate_bg_index(const ProcessSpec& spec, const BGOptions& opt = {}) {
    const int n = opt.points;
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        const double xi = opt.xi_min * std::pow(opt.xi_max / opt.xi_min, static_cast<double>(i) / (n - 1));
        lx[i] = std::log(xi);
        ly[i] = std::log(std::abs(char_exponent(spec, xi).psi));
    }
    const auto raw = detail::fit_line(lx, ly);
    BGIndexEstimate est;
    est.xi_min = opt.xi_min;
    est.xi_max = opt.xi_max;
    est.r_squared = raw.r_squared;
    est.raw_slope = raw.slope;

    // local slopes against z = 1/log ξ, quadratic least squares, read off z = 0
    std::vector<double> z(n - 1), s(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        z[i] = 2.0 / (lx[i] + lx[i + 1]);
        s[i] = (ly[i + 1] - ly[i]) / (lx[i + 1] - lx[i]);
    }
    double S[5] = {0, 0, 0, 0, 0}, T[3] = {0, 0, 0};
    for (int i = 0; i + 1 < n; ++i) {
        double p = 1.0;
        for (int k = 0; k < 5; ++k) {
            S[k] += p;
            if (k < 3) T[k] += p * s[i];
            p *= z[i];
        }
    }
    // normal equations [S0 S1 S2; S1 S2 S3; S2 S3 S4] c = T
    const double a11 = S[0], a12 = S[1], a13 = S[2], a22 = S[2], a23 = S[3], a33 = S[4];
    const double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) + a13 * (a12 * a23 - a22 * a13);
    double c0 = raw.slope;
    if (std::abs(det) > 0) {
        c0 = (T[0] * (a22 * a33 - a23 * a23) - a12 * (T[1] * a33 - a23 * T[2]) + a13 * (T[1] * a23 - a22 * T[2])) / det;
        double sse = 0;
        const double c1 = (a11 * (T[1] * a33 - a23 * T[2]) - T[0] * (a12 * a33 - a23 * a13) +
                           a13 * (a12 * T[2] - T[1] * a13)) /
                          det;
        const double c2 = (a11 * (a22 * T[2] - T[1] * a23) - a12 * (a12 * T[2] - T[1] * a13) +
                           T[0] * (a12 * a23 - a22 * a13)) /
                          det;
        for (int i = 0; i + 1 < n; ++i) {
            const double r = s[i] - c0 - c1 * z[i] - c2 * z[i] * z[i];
            sse += r * r;
        }
        const double s2 = n - 1 > 3 ? sse / (n - 1 - 3) : 0.0;
        const double inv00 = (a22 * a33 - a23 * a23) / det;
        est.slope_stderr = std::sqrt(std::max(0.0, s2 * inv00));
    }
    double beta = std::clamp(c0, 0.0, 2.0);
    if (beta < opt.zero_threshold) beta = 0.0;
    est.beta_hat = beta;
    return est;
}

/// Ψ tabulated on a log-spaced grid with a cubic spline in (log ξ, log(-Ψ)),
/// for the quadrature families where Fourier inversion needs millions of values.
/// The slowly decaying ripple caused by a kink of the Lévy density at t = 1 is
/// removed before interpolation and added back analytically.
class ExponentTable {
public:
    static constexpr double kXiLo = 1e-8;
    static constexpr double kXiHi = 1e10;
    static constexpr int kPerDecade = 96;

    explicit ExponentTable(const ProcessSpec& spec) {
        if (!spec.symmetric()) throw UnsupportedFamilyError("exponent table requires a symmetric family");
        if (needs_quadrature(spec)) {
            const detail::JumpKernel q(spec);
            near_jet_ = q.jet(1.0, true);
            far_jet_ = q.jet(1.0, false);
        }
        const int decades = static_cast<int>(std::lround(std::log10(kXiHi / kXiLo)));
        const int n = decades * kPerDecade + 1;
        lx_.resize(n);
        ly_.resize(n);
        h_ = std::log(10.0) / kPerDecade;
        for (int i = 0; i < n; ++i) {
            lx_[i] = std::log(kXiLo) + i * h_;
            const double xi = std::exp(lx_[i]);
            const double psi = char_exponent(spec, xi).psi.real() - ripple(xi);
            if (!(psi < 0.0)) throw NumericalError("exponent table: Psi must be negative away from 0", psi);
            ly_[i] = std::log(-psi);
        }
        build_spline();
    }

    /// Re Ψ(ξ) (Ψ is real for the tabulated families).
    double operator()(double xi) const {
        const double a = std::abs(xi);
        if (a == 0.0) return 0.0;
        return smooth(a) + ripple(a);
    }

private:
    /// 2(C⁺ - C⁻): endpoint expansions at t = 1 from both sides, blended in over ξ ∈ [16, 64].
    double ripple(double xi) const {
        if (xi <= 16.0) return 0.0;
        const double z = std::clamp(std::log(xi / 16.0) / std::log(4.0), 0.0, 1.0);
        const double w = z * z * z * (10.0 - 15.0 * z + 6.0 * z * z);
        const double far = detail::oscillatory_tail(far_jet_, 1.0, xi).first;
        const double near = detail::oscillatory_tail(near_jet_, 1.0, xi).first;
        return w * 2.0 * (far - near);
    }

    double smooth(double a) const {
        const double l = std::log(a);
        const int n = static_cast<int>(lx_.size());
        if (l <= lx_[0]) {
            const double slope = (ly_[1] - ly_[0]) / h_;
            return -std::exp(ly_[0] + slope * (l - lx_[0]));
        }
        if (l >= lx_[n - 1]) {
            const double slope = (ly_[n - 1] - ly_[n - 2]) / h_;
            return -std::exp(ly_[n - 1] + slope * (l - lx_[n - 1]));
        }
        int i = std::min(static_cast<int>((l - lx_[0]) / h_), n - 2);
        const double u = (l - lx_[i]) / h_;
        const double v = 1.0 - u;
        const double y =
            v * ly_[i] + u * ly_[i + 1] + ((v * v * v - v) * m_[i] + (u * u * u - u) * m_[i + 1]) * h_ * h_ / 6.0;
        return -std::exp(y);
    }

    void build_spline() {
        const int n = static_cast<int>(lx_.size());
        m_.assign(n, 0.0);
        std::vector<double> c(n, 0.0), d(n, 0.0);
        // natural spline, uniform spacing: m[i-1] + 4 m[i] + m[i+1] = 6 Δ²y / h²
        for (int i = 1; i < n - 1; ++i) d[i] = 6.0 * (ly_[i + 1] - 2.0 * ly_[i] + ly_[i - 1]) / (h_ * h_);
        for (int i = 1; i < n - 1; ++i) {
            const double denom = 4.0 - (i > 1 ? c[i - 1] : 0.0);
            c[i] = 1.0 / denom;
            d[i] = (d[i] - (i > 1 ? d[i - 1] : 0.0)) / denom;
        }
        for (int i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
    }

    std::vector<double> lx_, ly_, m_;
    double h_ = 0.0;
    detail::Jet near_jet_{}, far_jet_{};
};

/// Shared table per spec; built once, then read concurrently.
inline std::shared_ptr<const ExponentTable> exponent_table(const ProcessSpec& spec) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const ExponentTable>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[spec.id()];
    if (!slot) slot = std::make_shared<const ExponentTable>(spec);
    return slot;
}

/// Vectorisable Ψ evaluator: closed form where available, the shared table otherwise.
class ExponentEvaluator {
public:
    explicit ExponentEvaluator(const ProcessSpec& spec) : spec_(spec) {
        if (needs_quadrature(spec)) table_ = exponent_table(spec);
    }
    cplx operator()(double xi) const {
        if (table_) return (*table_)(xi);
        return char_exponent(spec_, xi).psi;
    }
    const ProcessSpec& spec() const { return spec_; }

private:
    ProcessSpec spec_;
    std::shared_ptr<const ExponentTable> table_;
};

}  // namespace levy
