#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace levy::quad {

struct Result {
    double value = 0.0;
    double abs_err = 0.0;
    bool converged = true;
    int evaluations = 0;

    Result& operator+=(const Result& o) {
        value += o.value;
        abs_err += o.abs_err;
        converged = converged && o.converged;
        evaluations += o.evaluations;
        return *this;
    }
};

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    int max_intervals = 2000;
};

namespace detail {

// 15-point Kronrod nodes; odd indices (1,3,5,7) are the embedded 7-point Gauss nodes.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, err;
};

template <class F>
Segment gk15(const F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    double resabs = std::abs(resk);
    std::array<double, 7> f1{}, f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        const double s = f1[j] + f2[j];
        resk += kWgk[j] * s;
        resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) resg += kWg[j / 2] * s;
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j)
        resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
    resk *= half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs(resk - resg * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
    return {a, b, resk, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
/// Stops when the summed error estimate is below max(abs_tol, rel_tol*|I|);
/// otherwise returns the partial estimate with converged = false.
template <class F>
Result integrate(const F& f, double a, double b, const Options& opt = {}) {
    if (a == b) return {};
    std::vector<detail::Segment> segs;
    segs.reserve(64);
    segs.push_back(detail::gk15(f, a, b));
    int evals = 15;
    auto worst = [](const detail::Segment& l, const detail::Segment& r) { return l.err < r.err; };
    while (true) {
        double total = 0.0, err = 0.0;
        for (const auto& s : segs) {
            total += s.value;
            err += s.err;
        }
        if (err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total)))
            return {total, err, true, evals};
        if (static_cast<int>(segs.size()) >= opt.max_intervals)
            return {total, err, false, evals};
        std::pop_heap(segs.begin(), segs.end(), worst);
        const auto s = segs.back();
        segs.pop_back();
        const double mid = 0.5 * (s.a + s.b);
        if (mid <= s.a || mid >= s.b)  // interval no longer divisible
            return {total, err, false, evals};
        segs.push_back(detail::gk15(f, s.a, mid));
        std::push_heap(segs.begin(), segs.end(), worst);
        segs.push_back(detail::gk15(f, mid, s.b));
        std::push_heap(segs.begin(), segs.end(), worst);
        evals += 30;
    }
}

/// integrate() that throws NumericalError (with the partial estimate) on failure.
template <class F>
Result integrate_or_throw(const F& f, double a, double b, const Options& opt = {},
                          const char* what = "adaptive quadrature did not converge") {
    auto r = integrate(f, a, b, opt);
    if (!r.converged) throw NumericalError(what, r.value, r.abs_err);
    return r;
}

/// ∫_a^b f(x) dx for 0 < a < b, evaluated in the variable s = log x. Suited to
/// integrands varying like powers of x over many decades.
template <class F>
Result integrate_log(const F& f, double a, double b, const Options& opt = {}) {
    auto g = [&](double s) {
        const double x = std::exp(s);
        return f(x) * x;
    };
    const double la = std::log(a), lb = std::log(b);
    // split into unit-length pieces in log space so each piece is well resolved
    const int pieces = std::max(1, static_cast<int>(std::ceil(lb - la)));
    Result total;
    Options sub = opt;
    for (int i = 0; i < pieces; ++i) {
        const double s0 = la + (lb - la) * i / pieces;
        const double s1 = (i + 1 == pieces) ? lb : la + (lb - la) * (i + 1) / pieces;
        total += integrate(g, s0, s1, sub);
    }
    return total;
}

/// ∫_a^∞ f(x) dx for a > 0 and f decaying at least like a power: doubling panels
/// in log space until a panel contributes below tolerance.
template <class F>
Result integrate_log_to_infinity(const F& f, double a, const Options& opt = {}, int max_panels = 80) {
    auto g = [&](double s) {
        const double x = std::exp(s);
        return f(x) * x;
    };
    Result total;
    double s0 = std::log(a);
    double width = 1.0;
    for (int i = 0; i < max_panels; ++i) {
        const double s1 = s0 + width;
        if (s1 > 709.0) break;  // exp overflow; anything left is below double range
        const auto piece = integrate(g, s0, s1, opt);
        total += piece;
        const double small = std::max(opt.abs_tol * 1e-3, opt.rel_tol * std::abs(total.value));
        if (std::abs(piece.value) <= small && i > 2) return total;
        s0 = s1;
        width = std::min(width * 1.5, 16.0);
    }
    total.converged = false;
    return total;
}

/// ∫_a^b f with an integrable algebraic singularity at a, via x = a + (b-a) y^k.
template <class F>
Result integrate_left_singular(const F& f, double a, double b, const Options& opt = {}, int power = 8) {
    const double w = b - a;
    auto g = [&](double y) {
        if (y <= 0.0) return 0.0;
        const double yk1 = std::pow(y, power - 1);
        return f(a + w * yk1 * y) * w * power * yk1;
    };
    return integrate(g, 0.0, 1.0, opt);
}

}  // namespace levy::quad
