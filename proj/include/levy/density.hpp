#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <complex>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "process_model.hpp"
#include "quadrature.hpp"

namespace levy {

enum class DensityMethod { FftInversion, ClosedForm };

inline const char* method_name(DensityMethod m) {
    return m == DensityMethod::FftInversion ? "fft_inversion" : "closed_form";
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// A pdf tabulated on a uniform grid. Sample j sits at x0 + j*dx and stands for
/// the cell [x_j - dx/2, x_j + dx/2); the cells tile [lower(), upper()).
struct DensityGrid {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> values;
    double tail_mass = 0.0;  ///< probability outside [lower(), upper())
    DensityMethod method = DensityMethod::FftInversion;
    double clipped_mass = 0.0;  ///< mass removed by clipping negative inversion ringing
    bool flagged = false;       ///< clipped mass above 1e-8
    double cutoff = 0.0;        ///< frequency cutoff used by the inversion (π/dx)
    /// Asymptotic pdf valid beyond the grid; empty when the tails are negligible.
    std::function<double(double)> tail_pdf;

    std::size_t size() const { return values.size(); }
    double x(std::size_t j) const { return x0 + static_cast<double>(j) * dx; }
    double lower() const { return x0 - 0.5 * dx; }
    double upper() const { return x0 + (static_cast<double>(values.size()) - 0.5) * dx; }
    double mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * dx;
    }
    /// Linear interpolation; zero outside the grid.
    double operator()(double xv) const {
        const double u = (xv - x0) / dx;
        if (u < 0.0 || u > static_cast<double>(values.size() - 1)) return 0.0;
        const auto i = std::min(static_cast<std::size_t>(u), values.size() - 2);
        const double w = u - static_cast<double>(i);
        return (1.0 - w) * values[i] + w * values[i + 1];
    }
    /// Model probability outside the grid, from tail_pdf.
    double modeled_tail_mass() const;
};

/// Grid parameters for an inversion.
struct GridPlan {
    double lower = 0.0;  ///< left edge of the first cell
    double dx = 0.0;
    std::size_t n = 0;
};

struct DensityOptions {
    std::size_t n_points = 0;             ///< 0: chosen automatically (power of two)
    std::optional<Interval> x_range;      ///< default: from scale, variance and Lévy tail estimates
    int align_to = 0;                     ///< m > 0: cell edges fall on Z/m and values are cell averages
    double target_decay = 1e-12;          ///< desired |Φ| at the cutoff
    double required_decay = 1e-8;         ///< decay check threshold
    double max_cutoff = 1e7;              ///< cap on the cutoff in units of 1/(body scale)
    std::size_t max_points = std::size_t{1} << 22;
    std::size_t min_points = std::size_t{1} << 12;
};

namespace detail {

inline std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::size_t next_pow2(double v) {
    std::size_t n = 1;
    v = std::min(v, 0x1p62);
    while (static_cast<double>(n) < v) n <<= 1;
    return n;
}

inline std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}

/// In-place forward complex DFT, y_j = Σ_k a_k e^{-2πi jk/N}.
inline void fft_forward(std::vector<std::complex<double>>& a) {
    auto* data = reinterpret_cast<fftw_complex*>(a.data());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(a.size()), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

/// Series for the symmetric stable pdf with Φ = exp(-c|ξ|^α), valid for large |x|
/// (convergent for α < 1, asymptotic for α > 1).
inline double stable_tail_series(double alpha, double c, double x) {
    const double a = std::abs(x);
    if (alpha >= 2.0) return 0.0;
    double sum = 0.0, prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 40; ++k) {
        const double lg = std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0);
        const double mag = std::exp(lg + k * std::log(c) - (alpha * k + 1.0) * std::log(a));
        if (alpha > 1.0 && mag > prev) break;  // asymptotic series starts diverging
        const double term = mag * std::sin(0.5 * k * std::numbers::pi * alpha);
        sum += (k % 2 == 1 ? term : -term);
        if (mag < 1e-17 * std::abs(sum)) break;
        prev = mag;
    }
    return sum / std::numbers::pi;
}

inline double normal_pdf(double x, double mean, double var) {
    const double z = x - mean;
    return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double normal_cdf(double x, double mean, double var) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

}  // namespace detail

inline double DensityGrid::modeled_tail_mass() const {
    if (!tail_pdf) return 0.0;
    quad::Options opt{1e-16, 1e-10, 2000};
    const auto right = quad::integrate_log_to_infinity(tail_pdf, std::max(upper(), 1e-300), opt);
    const auto left =
        quad::integrate_log_to_infinity([&](double y) { return tail_pdf(-y); }, std::max(-lower(), 1e-300), opt);
    return right.value + left.value;
}

/// Variance of L_t when finite (Gaussian part plus ∫x²ν), else nullopt.
inline std::optional<double> marginal_variance(const ProcessSpec& spec, double t) {
    switch (spec.family()) {
        case Family::Wiener: return spec.as<WienerParams>().sigma2 * t;
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            return p.tau * p.theta * p.theta * t;
        }
        case Family::Laplace: {
            const double s = spec.as<LaplaceParams>().scale;
            return 2.0 * s * s * t;
        }
        case Family::TemperedStable: {
            const auto& p = spec.as<TemperedStableParams>();
            const double k = (2.0 - p.alpha) / p.p;
            return t * 2.0 * p.c * std::tgamma(k) / (p.p * std::pow(p.lambda, k));
        }
        case Family::LayeredStable: {
            const auto& p = spec.as<LayeredStableParams>();
            if (p.alpha_inf <= 2.0) return std::nullopt;
            return t * 2.0 * (p.a0 / (2.0 - p.alpha0) + p.a_inf / (p.alpha_inf - 2.0));
        }
        case Family::SaS:
            if (spec.as<SaSParams>().alpha == 2.0) return 2.0 * spec.as<SaSParams>().gamma * t;
            return std::nullopt;
    }
    return std::nullopt;
}

inline double marginal_mean(const ProcessSpec& spec, double t) {
    switch (spec.family()) {
        case Family::Wiener: return spec.as<WienerParams>().mu * t;
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            return p.tau * p.theta * t;
        }
        default: return 0.0;
    }
}

/// Asymptotic pdf of L_t for |x| far beyond the bulk: the stable series for SaS,
/// t·q(|x|) for layered stable. Empty for light-tailed families.
inline std::function<double(double)> tail_model(const ProcessSpec& spec, double t) {
    switch (spec.family()) {
        case Family::SaS: {
            const auto& p = spec.as<SaSParams>();
            if (p.alpha == 2.0) return {};
            const double alpha = p.alpha, c = p.gamma * t;
            if (alpha == 1.0)
                return [c](double x) { return c / (std::numbers::pi * (c * c + x * x)); };
            return [alpha, c](double x) { return detail::stable_tail_series(alpha, c, x); };
        }
        case Family::LayeredStable: {
            const detail::JumpKernel q(spec);
            return [q, t](double x) { return t * q(std::abs(x)); };
        }
        default: return {};
    }
}

namespace detail {

/// Smallest ξ with t·Re Ψ(ξ) <= log(target), searched up to cap.
template <class Exponent>
double find_cutoff(const Exponent& psi, double t, double target, double cap) {
    const double goal = std::log(target);
    auto level = [&](double xi) { return t * std::real(psi(xi)); };
    double hi = 1e-3;
    while (hi < cap && level(hi) > goal) hi *= 2.0;
    if (hi >= cap) return cap;
    double lo = hi / 2.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = std::sqrt(lo * hi);
        (level(mid) > goal ? lo : hi) = mid;
    }
    return hi;
}

/// Body scale: 1/ξ where t|Ψ(ξ)| = 1.
template <class Exponent>
double body_scale(const Exponent& psi, double t) {
    auto level = [&](double xi) { return -t * std::real(psi(xi)); };
    double hi = 1e-6;
    while (level(hi) < 1.0 && hi < 1e12) hi *= 2.0;
    double lo = hi / 2.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = std::sqrt(lo * hi);
        (level(mid) < 1.0 ? lo : hi) = mid;
    }
    return 1.0 / hi;
}

/// Radius beyond which the jump tail t·ν(|x| > R) falls below eps.
inline double levy_tail_radius(const ProcessSpec& spec, double t, double eps, double start) {
    if (spec.family() == Family::Wiener) return 0.0;
    if (spec.family() == Family::SaS && spec.as<SaSParams>().alpha == 2.0) return 0.0;
    auto tail = [&](double R) {
        quad::Options opt{1e-300, 1e-6, 500};
        const auto r = quad::integrate_log_to_infinity([&](double x) { return levy_density(spec, x); }, R, opt);
        const auto l = quad::integrate_log_to_infinity([&](double x) { return levy_density(spec, -x); }, R, opt);
        return t * (r.value + l.value);
    };
    double R = std::max(start, 1e-12);
    for (int i = 0; i < 200 && tail(R) > eps; ++i) {
        R *= 2.0;
        if (R > 1e30) break;
    }
    return R;
}

}  // namespace detail

/// Evaluate a characteristic function on the DFT frequencies of `plan` and invert.
/// When `tail` is given, the periodic images of the tails (aliasing) are removed.
template <class CharFn>
DensityGrid invert_on_plan(const CharFn& phi, const GridPlan& plan, std::function<double(double)> tail) {
    const std::size_t n = plan.n;
    const double L = plan.dx * static_cast<double>(n);
    const double x0 = plan.lower + 0.5 * plan.dx;
    std::vector<std::complex<double>> a(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
        const double xi = 2.0 * std::numbers::pi * kk / L;
        a[k] = phi(xi) * std::polar(1.0 / L, -xi * x0);
    }
    detail::fft_forward(a);

    DensityGrid g;
    g.x0 = x0;
    g.dx = plan.dx;
    g.method = DensityMethod::FftInversion;
    g.cutoff = std::numbers::pi / plan.dx;
    g.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) g.values[j] = a[j].real();

    if (tail) {
        // aliased images Σ_{k≠0} p(x + kL), tabulated coarsely and interpolated
        const int coarse = 2048;
        std::vector<double> alias(coarse + 1);
        auto images = [&](double xv) {
            double s = 0.0;
            const int K = 64;
            for (int k = 1; k <= K; ++k) s += tail(xv + k * L) + tail(xv - k * L);
            // remaining images approximated by the integral of the tail model
            quad::Options opt{1e-300, 1e-8, 500};
            const double far = (K + 0.5) * L;
            s += (quad::integrate_log_to_infinity(tail, far + xv, opt).value +
                  quad::integrate_log_to_infinity([&](double y) { return tail(-y); }, far - xv, opt).value) /
                 L;
            return s;
        };
        const double lo = g.lower();
        const double centre_image = images(lo + 0.5 * L);
        if (centre_image > 1e-18) {
            for (int i = 0; i <= coarse; ++i) alias[i] = images(lo + L * i / coarse);
            for (std::size_t j = 0; j < n; ++j) {
                const double u = (g.x(j) - lo) / L * coarse;
                const int i = std::min(static_cast<int>(u), coarse - 1);
                const double w = u - i;
                g.values[j] -= (1.0 - w) * alias[i] + w * alias[i + 1];
            }
        }
        g.tail_pdf = std::move(tail);
    }

    double neg = 0.0;
    for (double& v : g.values)
        if (v < 0.0) {
            neg -= v;
            v = 0.0;
        }
    g.clipped_mass = neg * g.dx;
    g.flagged = g.clipped_mass > 1e-8;
    g.tail_mass = std::max(0.0, 1.0 - g.mass());
    return g;
}

namespace detail {

inline GridPlan make_plan(double centre, double half_width, double dx_max, const DensityOptions& opt) {
    GridPlan plan;
    double dx = dx_max;
    if (opt.align_to > 0) {
        const double cell = 1.0 / opt.align_to;
        const double r = std::ceil(cell / dx_max - 1e-9);
        dx = cell / r;
    }
    std::size_t n = opt.n_points;
    if (n == 0) {
        n = next_pow2(2.0 * half_width / dx);
        n = std::clamp(n, opt.min_points, opt.max_points);
    } else if (n & (n - 1)) {
        throw SpecError("density_grid: n_points must be a power of two");
    }
    if (opt.align_to <= 0 && opt.n_points == 0 && 2.0 * half_width / static_cast<double>(n) < dx)
        dx = 2.0 * half_width / static_cast<double>(n);
    if (opt.align_to <= 0 && opt.n_points != 0 && opt.x_range) dx = std::min(dx_max, 2.0 * half_width / n);
    plan.dx = dx;
    plan.n = n;
    // a node sits on the centre
    double lower = centre - dx * (0.5 * static_cast<double>(n) + 0.5);
    if (opt.align_to > 0) lower = std::floor(lower * opt.align_to) / opt.align_to;
    plan.lower = lower;
    return plan;
}

}  // namespace detail

/// Plan a grid for L_t: cutoff from the decay of Φ, width from body scale,
/// variance and Lévy tail estimates.
inline GridPlan plan_density_grid(const ProcessSpec& spec, double t, const DensityOptions& opt) {
    const ExponentEvaluator psi(spec);
    // the cap applies to the frequency measured in units of the body scale
    const double scale = detail::body_scale(psi, t);
    const double cutoff = detail::find_cutoff(psi, t, opt.target_decay, opt.max_cutoff / scale);
    const double decay = std::exp(t * std::real(psi(cutoff)));
    if (!(decay < opt.required_decay))
        throw NonIntegrableError("density_grid: |Phi| = " + detail::fmt3(decay) + " at the frequency cap " +
                                     detail::fmt3(cutoff) +
                                     "; use closed_form or restrict to families with closed forms at this t",
                                 decay);
    const double dx_max = std::numbers::pi / cutoff;
    double centre = marginal_mean(spec, t);
    double half = 0.0;
    if (opt.x_range) {
        centre = 0.5 * (opt.x_range->lo + opt.x_range->hi);
        half = 0.5 * (opt.x_range->hi - opt.x_range->lo);
    } else {
        half = 40.0 * scale;
        if (auto var = marginal_variance(spec, t)) half = std::max(half, 40.0 * std::sqrt(*var));
        half = std::max(half, detail::levy_tail_radius(spec, t, 1e-13, half));
    }
    auto plan = detail::make_plan(centre, half, dx_max, opt);
    const double span = static_cast<double>(plan.n) * plan.dx;
    if (!tail_model(spec, t) && !opt.x_range && opt.align_to <= 0 && span < 2.0 * half) {
        // no tail model to undo aliasing: the window must hold the mass
        plan.dx = 2.0 * half / static_cast<double>(plan.n);
        plan.lower = centre - plan.dx * (0.5 * static_cast<double>(plan.n) + 0.5);
        const double coarse = std::exp(t * std::real(psi(std::numbers::pi / plan.dx)));
        if (!(coarse < opt.required_decay))
            throw NonIntegrableError("density_grid: |Phi| = " + detail::fmt3(coarse) + " at the cutoff allowed by " +
                                         std::to_string(plan.n) + " points",
                                     coarse);
    }
    return plan;
}

/// pdf of L_t on a uniform grid by discrete Fourier inversion of Φ_{L_t}.
inline DensityGrid density_grid(const ProcessSpec& spec, double t, const DensityOptions& opt = {}) {
    if (!(t > 0.0) || !std::isfinite(t)) throw SpecError("density_grid: t must be > 0");
    const auto plan = plan_density_grid(spec, t, opt);
    const ExponentEvaluator psi(spec);
    if (opt.align_to > 0) {
        // transform of the cell average: Φ(ξ) sinc(ξ dx / 2)
        const double h = 0.5 * plan.dx;
        auto avg = [&](double xi) {
            const double u = xi * h;
            return std::exp(t * psi(xi)) * (u == 0.0 ? 1.0 : std::sin(u) / u);
        };
        return invert_on_plan(avg, plan, tail_model(spec, t));
    }
    auto phi = [&](double xi) { return std::exp(t * psi(xi)); };
    return invert_on_plan(phi, plan, tail_model(spec, t));
}

/// Symmetric α-stable reference pdf at t = 1 (Φ = exp(-γ|ξ|^α)).
inline DensityGrid stable_reference_density(double alpha, double gamma, const DensityOptions& opt = {}) {
    return density_grid(ProcessSpec::sas(alpha, gamma), 1.0, opt);
}

/// pdf of t^{-1/β} L_t on the grid of its stable limit SαS(β, γ*), so grids for
/// different t share abscissae.
inline DensityGrid rescaled_density(const ProcessSpec& spec, double t, double beta, const DensityOptions& opt = {}) {
    if (!(t > 0.0)) throw SpecError("rescaled_density: t must be > 0");
    if (!(beta > 0.0 && beta <= 2.0)) throw SpecError("rescaled_density: beta must lie in (0, 2]");
    const double gamma_star = stable_limit_constant(spec);
    if (!(gamma_star > 0.0)) throw UnsupportedFamilyError("rescaled_density: no stable limit for this family");
    const auto limit = ProcessSpec::sas(beta, gamma_star);
    const auto plan = plan_density_grid(limit, 1.0, opt);
    const ExponentEvaluator psi(spec);
    const double s = std::pow(t, 1.0 / beta);
    auto phi = [&](double xi) { return std::exp(t * psi(xi / s)); };
    const double edge = std::numbers::pi / plan.dx;
    const double decay = std::abs(phi(edge));
    if (!(decay < opt.required_decay))
        throw NonIntegrableError("rescaled_density: characteristic function has not decayed at the grid cutoff",
                                 decay);
    std::function<double(double)> tail;
    if (auto base = tail_model(spec, t)) tail = [base, s](double y) { return s * base(s * y); };
    return invert_on_plan(phi, plan, std::move(tail));
}

// ---------------------------------------------------------------------------
// closed forms

/// True when closed_form_pdf supports (spec, t).
inline bool has_closed_form_pdf(const ProcessSpec& spec, double t) {
    switch (spec.family()) {
        case Family::Wiener:
        case Family::Gamma: return true;
        case Family::SaS: {
            const double a = spec.as<SaSParams>().alpha;
            return a == 1.0 || a == 2.0;
        }
        case Family::Laplace: return t > 0.5;
        default: return false;
    }
    (void)t;
}

inline bool has_closed_form_cdf(const ProcessSpec& spec) {
    switch (spec.family()) {
        case Family::Wiener:
        case Family::Gamma: return true;
        case Family::SaS: {
            const double a = spec.as<SaSParams>().alpha;
            return a == 1.0 || a == 2.0;
        }
        default: return false;
    }
}

/// Analytic pdf of L_t: Gaussian, gamma, Cauchy, and the Laplace process
/// (difference of two gamma variables, a Bessel-K form). Laplace is accepted for
/// every t here; has_closed_form_pdf restricts grids to the bounded regime.
inline double closed_form_pdf(const ProcessSpec& spec, double t, double x) {
    switch (spec.family()) {
        case Family::Wiener: {
            const auto& p = spec.as<WienerParams>();
            return detail::normal_pdf(x, p.mu * t, p.sigma2 * t);
        }
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            if (x <= 0.0) return 0.0;
            const double k = p.tau * t;
            return std::exp((k - 1.0) * std::log(x) - x / p.theta - std::lgamma(k) - k * std::log(p.theta));
        }
        case Family::SaS: {
            const auto& p = spec.as<SaSParams>();
            if (p.alpha == 2.0) return detail::normal_pdf(x, 0.0, 2.0 * p.gamma * t);
            if (p.alpha == 1.0) {
                const double c = p.gamma * t;
                return c / (std::numbers::pi * (c * c + x * x));
            }
            break;
        }
        case Family::Laplace: {
            const double s = spec.as<LaplaceParams>().scale;
            const double a = std::abs(x) / s;
            if (a == 0.0) {
                if (t > 0.5) return std::tgamma(t - 0.5) / (2.0 * s * std::sqrt(std::numbers::pi) * std::tgamma(t));
                return std::numeric_limits<double>::infinity();
            }
            const double nu = std::abs(t - 0.5);
            double logk;
            if (a < 1e-100) {
                // small-argument expansion of K_ν
                const double lh = std::log(0.5 * a);
                if (nu == 0.0) {
                    logk = std::log(-lh - std::numbers::egamma);
                } else if (nu == std::floor(nu)) {
                    logk = std::log(0.5 * std::tgamma(nu)) - nu * lh;
                } else {
                    logk = std::log(0.5 * std::tgamma(nu)) - nu * lh +
                           std::log1p(std::tgamma(-nu) / std::tgamma(nu) * std::exp(2.0 * nu * lh));
                }
            } else if (a < 500.0) {
                logk = std::log(std::cyl_bessel_k(nu, a));
            } else {
                // large-argument expansion of K_ν
                const double mu = 4.0 * nu * nu;
                logk = 0.5 * std::log(std::numbers::pi / (2.0 * a)) - a +
                       std::log1p((mu - 1.0) / (8.0 * a) + (mu - 1.0) * (mu - 9.0) / (128.0 * a * a));
            }
            return std::exp((t - 0.5) * std::log(0.5 * a) + logk - std::lgamma(t)) / (s * std::sqrt(std::numbers::pi));
        }
        default: break;
    }
    throw UnsupportedFamilyError(std::string("closed_form_pdf: no closed form for ") + family_name(spec.family()));
}

/// P(L_t <= x) for the closed-form families.
inline double closed_form_cdf(const ProcessSpec& spec, double t, double x) {
    switch (spec.family()) {
        case Family::Wiener: {
            const auto& p = spec.as<WienerParams>();
            return detail::normal_cdf(x, p.mu * t, p.sigma2 * t);
        }
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            if (x <= 0.0) return 0.0;
            return boost::math::gamma_p(p.tau * t, x / p.theta);
        }
        case Family::SaS: {
            const auto& p = spec.as<SaSParams>();
            if (p.alpha == 2.0) return detail::normal_cdf(x, 0.0, 2.0 * p.gamma * t);
            if (p.alpha == 1.0) return 0.5 + std::atan(x / (p.gamma * t)) / std::numbers::pi;
            break;
        }
        default: break;
    }
    throw UnsupportedFamilyError(std::string("closed_form_cdf: no closed form for ") + family_name(spec.family()));
}

/// P(a <= L_t < b) without cancellation in the tails.
inline double closed_form_interval_mass(const ProcessSpec& spec, double t, double a, double b) {
    if (!(b > a)) return 0.0;
    switch (spec.family()) {
        case Family::Wiener:
        case Family::SaS: {
            double mean = 0.0, var = 0.0;
            if (spec.family() == Family::Wiener) {
                const auto& p = spec.as<WienerParams>();
                mean = p.mu * t;
                var = p.sigma2 * t;
            } else if (spec.as<SaSParams>().alpha == 2.0) {
                var = 2.0 * spec.as<SaSParams>().gamma * t;
            } else if (spec.as<SaSParams>().alpha == 1.0) {
                const double c = spec.as<SaSParams>().gamma * t;
                // atan(b/c) - atan(a/c) folded into one atan to avoid cancellation
                const double u = a / c, v = b / c;
                double d;
                if (std::isinf(v) && u > 0.0) {
                    d = std::atan(1.0 / u);
                } else if (std::isinf(u) && v < 0.0) {
                    d = std::atan(-1.0 / v);
                } else if (std::isinf(u) || std::isinf(v)) {
                    d = std::atan(v) - std::atan(u);
                } else if (u * v > -1.0) {
                    d = std::atan((v - u) / (1.0 + u * v));
                } else {
                    d = std::atan(v) - std::atan(u);
                }
                return d / std::numbers::pi;
            } else {
                break;
            }
            const double za = (a - mean) / std::sqrt(2.0 * var), zb = (b - mean) / std::sqrt(2.0 * var);
            if (za >= 0.0) return 0.5 * (std::erfc(za) - std::erfc(zb));
            if (zb <= 0.0) return 0.5 * (std::erfc(-zb) - std::erfc(-za));
            return 0.5 * (std::erf(zb) - std::erf(za));
        }
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            const double k = p.tau * t;
            const double lo = std::max(a, 0.0) / p.theta, hi = std::max(b, 0.0) / p.theta;
            if (hi <= 0.0) return 0.0;
            if (lo <= 0.0) return boost::math::gamma_p(k, hi);
            // use upper tails past the mode region
            if (lo > k) return boost::math::gamma_q(k, lo) - boost::math::gamma_q(k, hi);
            return boost::math::gamma_p(k, hi) - boost::math::gamma_p(k, lo);
        }
        default: break;
    }
    return closed_form_cdf(spec, t, b) - closed_form_cdf(spec, t, a);
}

/// Tabulated analytic pdf on n cells tiling x_range. Gamma grids hold cell
/// averages (exact cell masses), which stay finite when τt < 1; the grid is
/// clipped to x >= 0 so the first sample sits at dx/2.
inline DensityGrid closed_form_density(const ProcessSpec& spec, double t, std::size_t n_points, Interval x_range) {
    if (!(t > 0.0)) throw SpecError("closed_form_density: t must be > 0");
    if (!has_closed_form_pdf(spec, t))
        throw UnsupportedFamilyError(std::string("closed_form_density: unsupported family ") +
                                     family_name(spec.family()));
    if (n_points < 2 || !(x_range.hi > x_range.lo)) throw SpecError("closed_form_density: empty grid");
    const bool gamma = spec.family() == Family::Gamma;
    if (gamma) x_range.lo = std::max(x_range.lo, 0.0);
    DensityGrid g;
    g.method = DensityMethod::ClosedForm;
    g.dx = (x_range.hi - x_range.lo) / static_cast<double>(n_points);
    g.x0 = x_range.lo + 0.5 * g.dx;
    g.values.resize(n_points);
    for (std::size_t j = 0; j < n_points; ++j) {
        const double xj = g.x(j);
        g.values[j] = gamma ? closed_form_interval_mass(spec, t, xj - 0.5 * g.dx, xj + 0.5 * g.dx) / g.dx
                            : closed_form_pdf(spec, t, xj);
    }
    if (has_closed_form_cdf(spec)) {
        g.tail_mass = closed_form_interval_mass(spec, t, -std::numeric_limits<double>::infinity(), g.lower()) +
                      closed_form_interval_mass(spec, t, g.upper(), std::numeric_limits<double>::infinity());
        if (gamma) g.tail_mass = boost::math::gamma_q(spec.as<GammaParams>().tau * t, g.upper() / spec.as<GammaParams>().theta);
    } else {
        g.tail_mass = std::max(0.0, 1.0 - g.mass());
    }
    if (spec.family() == Family::SaS && spec.as<SaSParams>().alpha == 1.0) g.tail_pdf = tail_model(spec, t);
    return g;
}

/// Density of L_t: closed-form grid for the gamma family, Fourier inversion otherwise.
inline DensityGrid marginal_density(const ProcessSpec& spec, double t, const DensityOptions& opt = {}) {
    if (spec.family() == Family::Gamma && !opt.x_range) {
        const auto& p = spec.as<GammaParams>();
        const double k = p.tau * t;
        const double hi = p.theta * (k + 40.0 * std::sqrt(k) + 40.0);
        return closed_form_density(spec, t, opt.n_points ? opt.n_points : (std::size_t{1} << 18), {0.0, hi});
    }
    if (spec.family() == Family::Gamma)
        return closed_form_density(spec, t, opt.n_points ? opt.n_points : (std::size_t{1} << 18), *opt.x_range);
    return density_grid(spec, t, opt);
}

}  // namespace levy
