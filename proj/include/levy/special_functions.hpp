#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "errors.hpp"

namespace levy::special {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

namespace detail {
// Lanczos coefficients for g = 7, n = 9.
inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993227684700473478,  676.520368121885098567009190444019,
    -1259.13921672240287047156078755283, 771.3234287776530788486528258894,
    -176.61502916214059906584551354,     12.507343278686904814458936853,
    -0.13857109526572011689554707,       9.984369578019570859563e-6,
    1.50563273514931155834e-7};
}  // namespace detail

/// log Γ(x) for x > 0. Lanczos for x >= 1; below that the recurrence
/// Γ(x+1) = xΓ(x) shifts the argument up.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw SpecError("log_gamma: argument must be positive");
    if (x < 1.0) return log_gamma(x + 1.0) - std::log(x);
    const double z = x - 1.0;
    double a = detail::kLanczos[0];
    for (std::size_t i = 1; i < detail::kLanczos.size(); ++i) a += detail::kLanczos[i] / (z + static_cast<double>(i));
    const double t = z + detail::kLanczosG + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

/// ψ(x) = d/dx log Γ(x) for x > 0: recurrence ψ(x) = ψ(x+1) - 1/x up to x >= 10,
/// then the asymptotic Bernoulli series.
inline double digamma(double x) {
    if (!(x > 0.0)) throw SpecError("digamma: argument must be positive");
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // B2k / (2k) coefficients
    const double series =
        inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760))))));
    return shift + std::log(x) - 0.5 * inv - series;
}

}  // namespace levy::special
