#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "density.hpp"
#include "errors.hpp"
#include "process_model.hpp"
#include "quadrature.hpp"
#include "special_functions.hpp"

namespace levy {

/// Entropy in nats with an error bar.
struct EntropyValue {
    double value = 0.0;
    double err = 0.0;
    std::string method;
    bool flagged = false;
};

/// pmf of [X]_m = ⌊mX⌋/m: probs[i] is the mass of [(k0+i)/m, (k0+i+1)/m).
struct QuantizedLaw {
    int m = 1;
    std::int64_t offset_index = 0;
    std::vector<double> probs;
    double tail_mass = 0.0;
    /// Entropy contributed by bins outside probs (zero when the law is fully tabulated).
    double tail_entropy = 0.0;

    double total() const;
};

namespace detail {

/// Neumaier-compensated sum.
struct CompensatedSum {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

inline double neg_p_log_p(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

/// ∫ -f log(f/m) over (-∞, lo) ∪ [hi, ∞) for a tail model f (m = 1: differential entropy).
inline quad::Result outside_entropy(const std::function<double(double)>& f, double lo, double hi, double m = 1.0) {
    quad::Options opt{1e-300, 1e-10, 2000};
    const double lm = std::log(m);
    auto right = [&](double x) {
        const double v = f(x);
        return v > 0.0 ? -v * (std::log(v) - lm) : 0.0;
    };
    auto left = [&](double x) { return right(-x); };
    quad::Result r;
    if (hi > 0.0) r += quad::integrate_log_to_infinity(right, hi, opt);
    if (lo < 0.0) r += quad::integrate_log_to_infinity(left, -lo, opt);
    return r;
}

}  // namespace detail

inline double QuantizedLaw::total() const {
    detail::CompensatedSum s;
    for (double p : probs) s.add(p);
    return s.value() + tail_mass;
}

/// -∫ p log p on a density grid, plus the entropy of the tail model outside the grid
/// when the grid carries one. Grids without a tail model must hold all but 1e-4 of the mass.
inline EntropyValue differential_entropy(const DensityGrid& grid) {
    if (grid.size() < 2) throw SpecError("differential_entropy: grid needs at least two points");
    const bool modeled = static_cast<bool>(grid.tail_pdf);
    if (!modeled && !(grid.tail_mass < 1e-4))
        throw TailMassError("differential_entropy: tail mass " + std::to_string(grid.tail_mass) +
                                " outside the grid; enlarge the x range",
                            grid.tail_mass);
    detail::CompensatedSum full, coarse;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double h = detail::neg_p_log_p(grid.values[j]);
        full.add(h);
        if (j % 2 == 0) coarse.add(h);
    }
    EntropyValue r;
    r.value = full.value() * grid.dx;
    r.method = method_name(grid.method);
    // discretisation error from a half-resolution sum
    r.err = std::abs(r.value - coarse.value() * 2.0 * grid.dx) / 3.0;
    r.err += grid.clipped_mass * std::max(1.0, std::abs(std::log(std::max(grid.clipped_mass, 1e-300))));
    const double width = grid.upper() - grid.lower();
    if (modeled) {
        const auto tail = detail::outside_entropy(grid.tail_pdf, grid.lower(), grid.upper());
        r.value += tail.value;
        r.err += tail.abs_err;
        const double mismatch = std::abs(grid.tail_mass - grid.modeled_tail_mass());
        if (mismatch > 0.0) r.err += -mismatch * std::log(std::min(mismatch / width, 0.5));
    } else if (grid.tail_mass > 0.0) {
        r.err += -grid.tail_mass * std::log(std::min(grid.tail_mass / width, 0.5));
    }
    r.flagged = grid.flagged;
    return r;
}

/// -Σ p log p (0 log 0 = 0), plus tail_entropy for bins outside the table.
inline double discrete_entropy(const QuantizedLaw& law) {
    detail::CompensatedSum s;
    for (double p : law.probs) s.add(detail::neg_p_log_p(p));
    return s.value() + law.tail_entropy;
}

/// Bin masses of [X]_m from a grid whose cell edges fall on Z/m.
inline QuantizedLaw quantized_pmf(const DensityGrid& grid, int m) {
    if (m < 1) throw SpecError("quantized_pmf: m must be >= 1");
    const double bin = 1.0 / m;
    const double ratio = bin / grid.dx;
    const auto r = static_cast<std::int64_t>(std::llround(ratio));
    if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-6 * ratio)
        throw AlignmentError("quantized_pmf: bin width 1/m = " + std::to_string(bin) +
                             " is not a whole number of grid cells (dx = " + std::to_string(grid.dx) + ")");
    const double edge = grid.lower() * m;
    const auto k0 = static_cast<std::int64_t>(std::llround(edge));
    if (std::abs(edge - static_cast<double>(k0)) > 1e-6 / static_cast<double>(r) + 1e-9 * std::abs(edge))
        throw AlignmentError("quantized_pmf: grid edge " + std::to_string(grid.lower()) + " is not on the lattice Z/" +
                             std::to_string(m));
    QuantizedLaw law;
    law.m = m;
    law.offset_index = k0;
    const std::size_t n = grid.size();
    const std::size_t bins = (n + static_cast<std::size_t>(r) - 1) / static_cast<std::size_t>(r);
    law.probs.assign(bins, 0.0);
    for (std::size_t b = 0; b < bins; ++b) {
        detail::CompensatedSum s;
        const std::size_t end = std::min(n, (b + 1) * static_cast<std::size_t>(r));
        for (std::size_t j = b * static_cast<std::size_t>(r); j < end; ++j) s.add(grid.values[j]);
        law.probs[b] = s.value() * grid.dx;
    }
    law.tail_mass = grid.tail_mass;
    if (grid.tail_pdf) law.tail_entropy = detail::outside_entropy(grid.tail_pdf, grid.lower(), grid.upper(), m).value;
    return law;
}

// ---------------------------------------------------------------------------
// closed-form entropies

inline double gaussian_entropy(double variance) {
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

inline double cauchy_entropy(double scale) { return std::log(4.0 * std::numbers::pi * scale); }

/// h(L_t) for the gamma process: τt + log θ + log Γ(τt) + (1-τt)ψ(τt).
inline double gamma_entropy_closed_form(double theta, double tau, double t) {
    if (!(theta > 0.0) || !(tau > 0.0) || !(t > 0.0))
        throw SpecError("gamma_entropy_closed_form: theta, tau and t must be > 0");
    const double k = tau * t;
    return k + std::log(theta) + special::log_gamma(k) + (1.0 - k) * special::digamma(k);
}

/// Small-t expansion -1/(τt) - log t + log(θ/τ) - γ + 1.
inline double gamma_entropy_asymptotic(double theta, double tau, double t) {
    if (!(theta > 0.0) || !(tau > 0.0) || !(t > 0.0))
        throw SpecError("gamma_entropy_asymptotic: theta, tau and t must be > 0");
    return -1.0 / (tau * t) - std::log(t) + std::log(theta / tau) - special::kEulerGamma + 1.0;
}

/// Closed-form h(L_t) where one exists (Gaussian, Cauchy, gamma).
inline std::optional<double> closed_form_entropy(const ProcessSpec& spec, double t) {
    switch (spec.family()) {
        case Family::Wiener: return gaussian_entropy(spec.as<WienerParams>().sigma2 * t);
        case Family::Gamma: {
            const auto& p = spec.as<GammaParams>();
            return gamma_entropy_closed_form(p.theta, p.tau, t);
        }
        case Family::SaS: {
            const auto& p = spec.as<SaSParams>();
            if (p.alpha == 2.0) return gaussian_entropy(2.0 * p.gamma * t);
            if (p.alpha == 1.0) return cauchy_entropy(p.gamma * t);
            return std::nullopt;
        }
        default: return std::nullopt;
    }
}

/// -∫ p log p for a pdf symmetric about 0, possibly singular there.
template <class Pdf>
quad::Result symmetric_pdf_entropy(const Pdf& pdf, double scale) {
    quad::Options opt{1e-14, 1e-12, 4000};
    auto h = [&](double x) { return detail::neg_p_log_p(pdf(x)); };
    auto r = quad::integrate_left_singular(h, 0.0, scale, opt);
    r += quad::integrate_log_to_infinity(h, scale, opt);
    r.value *= 2.0;
    r.abs_err *= 2.0;
    return r;
}

namespace detail {

/// For t < 1/2 the pdf behaves like C·x^{2t-1} at the origin and carries visible
/// mass below the smallest double; that piece is integrated in closed form.
inline quad::Result laplace_entropy(const ProcessSpec& spec, double t) {
    const double s = spec.as<LaplaceParams>().scale;
    auto pdf = [&](double x) { return closed_form_pdf(spec, t, x); };
    if (t >= 0.5) return symmetric_pdf_entropy(pdf, s);
    quad::Options opt{1e-14, 1e-12, 4000};
    auto h = [&](double x) { return neg_p_log_p(pdf(x)); };
    const double eps = 1e-100 * s;
    const double b = 2.0 * t;
    const double logc = std::lgamma(0.5 - t) - std::log(2.0 * s * std::sqrt(std::numbers::pi)) - std::lgamma(t) +
                        (1.0 - b) * std::log(2.0 * s);
    // ∫_0^eps -C x^{b-1} (log C + (b-1) log x) dx
    const double le = std::log(eps);
    const double head = std::exp(logc + b * le) * (-logc / b - (b - 1.0) * (le / b - 1.0 / (b * b)));
    auto r = quad::integrate_log(h, eps, s, opt);
    r += quad::integrate_log_to_infinity(h, s, opt);
    r.value += head;
    r.value *= 2.0;
    r.abs_err *= 2.0;
    return r;
}

}  // namespace detail

enum class EntropySource { Auto, Density };

/// h(L_t). Auto: closed form when available, quadrature of the Bessel-form pdf for
/// the Laplace process, Fourier inversion otherwise. Density: always from a
/// tabulated density (closed-form grid for gamma, inversion for the rest).
inline EntropyValue marginal_entropy(const ProcessSpec& spec, double t, EntropySource src = EntropySource::Auto,
                                     const DensityOptions& opt = {}) {
    if (!(t > 0.0) || !std::isfinite(t)) throw SpecError("marginal_entropy: t must be > 0");
    if (src == EntropySource::Auto) {
        if (auto h = closed_form_entropy(spec, t)) return {*h, 0.0, "closed_form", false};
        if (spec.family() == Family::Laplace) {
            const auto r = detail::laplace_entropy(spec, t);
            return {r.value, r.abs_err, "quadrature", !r.converged};
        }
    }
    return differential_entropy(marginal_density(spec, t, opt));
}

// ---------------------------------------------------------------------------
// quantized laws

namespace detail {

/// Exact bins k0..k1-1 from an interval-mass function.
template <class Mass>
QuantizedLaw bins_from_mass(int m, std::int64_t k0, std::int64_t k1, const Mass& mass) {
    QuantizedLaw law;
    law.m = m;
    law.offset_index = k0;
    law.probs.resize(static_cast<std::size_t>(k1 - k0));
    for (std::int64_t k = k0; k < k1; ++k)
        law.probs[static_cast<std::size_t>(k - k0)] =
            mass(static_cast<double>(k) / m, static_cast<double>(k + 1) / m);
    return law;
}

inline constexpr std::int64_t kMaxExactBins = std::int64_t{1} << 22;

}  // namespace detail

/// Whether quantized_law uses exact cell masses (CDF or per-cell quadrature)
/// rather than a Fourier-inversion grid.
inline bool has_exact_quantization(const ProcessSpec& spec) {
    switch (spec.family()) {
        case Family::Wiener:
        case Family::Gamma:
        case Family::Laplace: return true;
        case Family::SaS: return spec.as<SaSParams>().alpha == 1.0 || spec.as<SaSParams>().alpha == 2.0;
        default: return false;
    }
}

/// Law of [L_t]_m. Interval masses come from the CDF for the Gaussian, Cauchy and
/// gamma cases, from per-bin quadrature of the pdf for the Laplace process, and
/// from an aligned Fourier-inversion grid otherwise.
inline QuantizedLaw quantized_law(const ProcessSpec& spec, double t, int m, const DensityOptions& opt = {}) {
    if (m < 1) throw SpecError("quantized_law: m must be >= 1");
    if (!(t > 0.0) || !std::isfinite(t)) throw SpecError("quantized_law: t must be > 0");
    auto mass = [&](double a, double b) { return closed_form_interval_mass(spec, t, a, b); };
    const double md = m;
    switch (spec.family()) {
        case Family::Wiener:
        case Family::Gamma:
        case Family::SaS: {
            if (spec.family() == Family::SaS && spec.as<SaSParams>().alpha == 1.0) {
                // exact bins in a core window, continuum approximation beyond it
                const double c = spec.as<SaSParams>().gamma * t;
                const auto K = std::max<std::int64_t>(
                    1, std::min<std::int64_t>(static_cast<std::int64_t>(std::ceil(1e4 * c * md)),
                                              detail::kMaxExactBins / 2));
                auto law = detail::bins_from_mass(m, -K, K, mass);
                const double X = static_cast<double>(K) / md;
                law.tail_mass = 2.0 * mass(X, std::numeric_limits<double>::infinity());
                auto pdf = [&](double x) { return closed_form_pdf(spec, t, x); };
                law.tail_entropy = detail::outside_entropy(pdf, -X, X, md).value;
                return law;
            }
            if (spec.family() == Family::SaS && spec.as<SaSParams>().alpha != 2.0) break;
            double lo, hi;
            if (spec.family() == Family::Gamma) {
                const auto& p = spec.as<GammaParams>();
                const double k = p.tau * t;
                lo = 0.0;
                hi = p.theta * (k + 40.0 * std::sqrt(k) + 40.0);
            } else {
                const double mean = marginal_mean(spec, t), sd = std::sqrt(*marginal_variance(spec, t));
                lo = mean - 40.0 * sd;
                hi = mean + 40.0 * sd;
            }
            const auto k0 = static_cast<std::int64_t>(std::floor(lo * md));
            const auto k1 = std::max(k0 + 1, static_cast<std::int64_t>(std::ceil(hi * md)));
            if (k1 - k0 > detail::kMaxExactBins)
                throw SpecError("quantized_law: m too large for the exact-bin window");
            auto law = detail::bins_from_mass(m, k0, k1, mass);
            law.tail_mass = closed_form_interval_mass(spec, t, -std::numeric_limits<double>::infinity(),
                                                      static_cast<double>(k0) / md) +
                            closed_form_interval_mass(spec, t, static_cast<double>(k1) / md,
                                                      std::numeric_limits<double>::infinity());
            return law;
        }
        case Family::Laplace: {
            const double s = spec.as<LaplaceParams>().scale;
            const double half = s * (40.0 * std::sqrt(2.0 * t) + 40.0 + 2.0 * t);
            const auto K = static_cast<std::int64_t>(std::ceil(half * md));
            if (2 * K > detail::kMaxExactBins) throw SpecError("quantized_law: m too large for the exact-bin window");
            quad::Options qo{1e-17, 1e-12, 400};
            auto pdf = [&](double x) { return closed_form_pdf(spec, t, x); };
            auto bin_mass = [&](double a, double b) {
                if (a == 0.0) return quad::integrate_left_singular(pdf, 0.0, b, qo).value;
                if (b == 0.0) return quad::integrate_left_singular([&](double y) { return pdf(-y); }, 0.0, -a, qo).value;
                return quad::integrate(pdf, a, b, qo).value;
            };
            // symmetric: compute the right half once
            QuantizedLaw law;
            law.m = m;
            law.offset_index = -K;
            law.probs.resize(static_cast<std::size_t>(2 * K));
            for (std::int64_t k = 0; k < K; ++k) {
                const double p = bin_mass(static_cast<double>(k) / md, static_cast<double>(k + 1) / md);
                law.probs[static_cast<std::size_t>(K + k)] = p;
                law.probs[static_cast<std::size_t>(K - 1 - k)] = p;
            }
            double inside = 0.0;
            for (double p : law.probs) inside += p;
            law.tail_mass = std::max(0.0, 1.0 - inside);
            return law;
        }
        default: break;
    }
    DensityOptions o = opt;
    o.align_to = m;
    return quantized_pmf(density_grid(spec, t, o), m);
}

/// H_{n,m}(L) = n · H([L_{1/n}]_m).
inline double process_entropy(const ProcessSpec& spec, int n, int m, const DensityOptions& opt = {}) {
    if (n < 1) throw SpecError("process_entropy: n must be >= 1");
    return n * discrete_entropy(quantized_law(spec, 1.0 / n, m, opt));
}

/// H([L_t]_m) - log m - h(L_t).
inline double renyi_gap(const ProcessSpec& spec, double t, int m, const DensityOptions& opt = {}) {
    const double H = discrete_entropy(quantized_law(spec, t, m, opt));
    return H - std::log(static_cast<double>(m)) - marginal_entropy(spec, t, EntropySource::Auto, opt).value;
}

/// Gap computed from a single tabulated density.
inline double renyi_gap(const DensityGrid& grid, int m) {
    return discrete_entropy(quantized_pmf(grid, m)) - std::log(static_cast<double>(m)) -
           differential_entropy(grid).value;
}

// ---------------------------------------------------------------------------
// curves

struct EntropyPoint {
    double abscissa = 0.0;  ///< t, or n for process entropies
    int n = 0;              ///< time quantization (0 when not applicable)
    int m = 0;              ///< amplitude quantization (0 for differential entropy)
    double value = 0.0;
    double err = 0.0;
    std::string method;
    std::optional<double> gap;
};

struct EntropyCurve {
    std::string spec_id;
    std::vector<EntropyPoint> points;

    void sort() {
        std::stable_sort(points.begin(), points.end(), [](const EntropyPoint& a, const EntropyPoint& b) {
            return a.abscissa < b.abscissa || (a.abscissa == b.abscissa && a.m < b.m);
        });
    }

    void write_csv(std::ostream& os) const {
        const bool quantized = std::any_of(points.begin(), points.end(), [](const auto& p) { return p.m > 0; });
        const auto old_prec = os.precision(12);
        os << "abscissa,value,err,method";
        if (quantized) os << ",m,renyi_gap";
        os << '\n';
        for (const auto& p : points) {
            os << p.abscissa << ',' << p.value << ',' << p.err << ',' << p.method;
            if (quantized) {
                os << ',' << p.m << ',';
                if (p.gap) os << *p.gap;
            }
            os << '\n';
        }
        os.precision(old_prec);
    }
};

/// h(L_t) over a t grid, or H([L_t]_m) with the Rényi gap when m > 0.
inline EntropyCurve entropy_curve(const ProcessSpec& spec, const std::vector<double>& t_grid, int m = 0,
                                  const DensityOptions& opt = {}) {
    EntropyCurve curve;
    curve.spec_id = spec.id();
    for (double t : t_grid) {
        const auto h = marginal_entropy(spec, t, EntropySource::Auto, opt);
        EntropyPoint pt;
        pt.abscissa = t;
        if (m > 0) {
            pt.m = m;
            pt.value = discrete_entropy(quantized_law(spec, t, m, opt));
            pt.err = h.err;
            pt.method = "quantized";
            pt.gap = pt.value - std::log(static_cast<double>(m)) - h.value;
        } else {
            pt.value = h.value;
            pt.err = h.err;
            pt.method = h.method;
        }
        curve.points.push_back(std::move(pt));
    }
    curve.sort();
    return curve;
}

}  // namespace levy
