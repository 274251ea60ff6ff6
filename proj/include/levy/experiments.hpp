#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "density.hpp"
#include "entropy.hpp"
#include "montecarlo.hpp"
#include "process_model.hpp"
#include "report.hpp"
#include "spec_json.hpp"

namespace levy {

struct ExperimentConfig {
    Tolerances tolerances;
    unsigned threads = 1;
    std::uint64_t seed = 20240601;
    DensityOptions density;
    std::size_t mc_draws = 1000000;
};

/// {first, first·ratio, ...}, count points.
inline std::vector<double> geometric_grid(double first, double ratio, int count) {
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) g[i] = first * std::pow(ratio, i);
    return g;
}

/// The default t grid {2^-1, ..., 2^-10}.
inline std::vector<double> default_t_grid() { return geometric_grid(0.5, 0.5, 10); }

namespace detail {

/// results[i] = f(items[i]) over up to `threads` workers; the first exception is rethrown.
template <class T, class F>
auto parallel_map(const std::vector<T>& items, unsigned threads, const F& f) {
    using R = decltype(f(items[0]));
    std::vector<R> out(items.size());
    std::exception_ptr error;
    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&] {
        while (true) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= items.size() || error) return;
                i = next++;
            }
            try {
                out[i] = f(items[i]);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(items.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

inline std::string fmt_g(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline std::string label(const std::string& name, const std::string& key, double v) {
    return name + "[" + key + "=" + fmt_g(v) + "]";
}

/// Exactly self-similar: the rescaled law does not depend on t.
inline bool self_similar(const ProcessSpec& spec) {
    return spec.family() == Family::SaS || (spec.family() == Family::Wiener && spec.as<WienerParams>().mu == 0.0);
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline json density_provenance(const DensityOptions& o) {
    return {{"n_points", o.n_points}, {"max_points", o.max_points}, {"target_decay", o.target_decay},
            {"max_cutoff", o.max_cutoff}};
}

}  // namespace detail

/// Least-squares slope of h(L_t) against log t, compared with 1/β; h(L_t) - (1/β) log t
/// at the smallest t is compared with h(Y_β) for the stable limit Y_β.
inline ExperimentReport entropy_slope(const ProcessSpec& spec, const std::vector<double>& t_grid,
                                      const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    const double beta = nominal_bg_index(spec);
    if (beta == 0.0)
        return skipped_report("entropy_slope", {spec.id()},
                              "Blumenthal-Getoor index is 0: h(L_t) decreases faster than any multiple of log t");
    if (t_grid.size() < 3) throw SpecError("entropy_slope: need at least three t values");
    const auto hs = detail::parallel_map(t_grid, cfg.threads, [&](double t) {
        return marginal_entropy(spec, t, EntropySource::Density, cfg.density);
    });
    std::vector<double> lt, h;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        lt.push_back(std::log(t_grid[i]));
        h.push_back(hs[i].value);
    }
    const auto fit = detail::fit_line(lt, h);
    const bool exact = detail::self_similar(spec);
    const double gamma_star = stable_limit_constant(spec);
    const double h_limit = beta == 2.0 ? gaussian_entropy(2.0 * gamma_star)
                                       : differential_entropy(stable_reference_density(beta, gamma_star, cfg.density)).value;
    const auto est = estimate_bg_index(spec);

    ExperimentReport r;
    r.experiment_id = "entropy_slope";
    r.spec_ids = {spec.id()};
    r.add("slope", fit.slope, 1.0 / beta, cfg.tolerances.get("slope", exact ? 0.02 : 0.05), "slope",
          Comparison::RelDiff);
    // h(L_t) - (1/β) log t at the smallest t, where the o(1) remainder is smallest
    std::size_t small = 0;
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] < t_grid[small]) small = i;
    const double offset = h[small] - std::log(t_grid[small]) / beta;
    r.add("intercept", offset, h_limit, cfg.tolerances.get("intercept", exact ? 1e-3 : 0.1), "intercept",
          Comparison::AbsDiff);
    r.add("beta_hat", est.beta_hat, beta, cfg.tolerances.get("bg_index", 0.05), "bg_index", Comparison::AbsDiff);
    r.provenance = {{"t_grid", num12_array(t_grid)},
                    {"beta", beta},
                    {"limit_constant", num12(gamma_star)},
                    {"density", detail::density_provenance(cfg.density)}};
    std::vector<double> errs;
    for (const auto& v : hs) errs.push_back(v.err);
    r.tables = {{"t", num12_array(t_grid)}, {"entropy", num12_array(h)}, {"entropy_err", num12_array(errs)},
                {"slope_stderr", num12(fit.slope_stderr)}, {"r_squared", num12(fit.r_squared)},
                {"fitted_intercept", num12(fit.intercept)}};
    r.runtime_seconds = clock.seconds();
    return r;
}

/// Distance between the density of t^{-1/β} L_t and its stable limit, and the
/// limit constant read off -t Ψ(t^{-1/β}).
inline ExperimentReport lss_convergence(const ProcessSpec& spec, double beta, const std::vector<double>& t_list,
                                        const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    if (beta == 0.0 || nominal_bg_index(spec) == 0.0)
        return skipped_report("lss_convergence", {spec.id()},
                              "index 0: the process is not locally self-similar (t^{-1/beta} L_t has no "
                              "non-degenerate limit)");
    if (t_list.empty()) throw SpecError("lss_convergence: empty t list");
    const double gamma_star = stable_limit_constant(spec);
    const auto ref = stable_reference_density(beta, gamma_star, cfg.density);
    auto sorted = t_list;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto dist = detail::parallel_map(sorted, cfg.threads, [&](double t) {
        const auto g = rescaled_density(spec, t, beta, cfg.density);
        double d = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) d = std::max(d, std::abs(g.values[j] - ref.values[j]));
        return d;
    });
    ExperimentReport r;
    r.experiment_id = "lss_convergence";
    r.spec_ids = {spec.id()};
    const bool exact = detail::self_similar(spec);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (exact)
            r.add(detail::label("sup_norm", "t", sorted[i]), dist[i], 0.0, cfg.tolerances.get("sup_norm", 1e-8),
                  "sup_norm", Comparison::AtMost);
        else if (i > 0)
            r.add(detail::label("sup_norm_change", "t", sorted[i]), dist[i] - dist[i - 1], 0.0, 0.0,
                  "sup_norm_change", Comparison::Below);
    }
    const ExponentEvaluator psi(spec);
    const double t_min = sorted.back();
    const double gamma_hat = -t_min * std::real(psi(std::pow(t_min, -1.0 / beta)));
    r.add("limit_constant", gamma_hat, gamma_star, cfg.tolerances.get("limit_constant", 0.02), "limit_constant",
          Comparison::RelDiff);
    r.provenance = {{"t_list", num12_array(sorted)},
                    {"beta", beta},
                    {"grid_points", ref.size()},
                    {"grid_dx", num12(ref.dx)},
                    {"density", detail::density_provenance(cfg.density)}};
    r.tables = {{"t", num12_array(sorted)}, {"sup_norm", num12_array(dist)}};
    r.runtime_seconds = clock.seconds();
    return r;
}

/// h(L_t) <= -(1/alpha_probe) log(1/t) + C with C matched at the largest t; for
/// index-0 processes also h(L_t)/log(1/t) at the smallest t.
inline ExperimentReport upper_bound_check(const ProcessSpec& spec, double alpha_probe,
                                          const std::vector<double>& t_grid, const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    const double beta = nominal_bg_index(spec);
    if (!(alpha_probe > beta)) throw SpecError("upper_bound_check: alpha_probe must exceed the index");
    if (t_grid.size() < 2) throw SpecError("upper_bound_check: need at least two t values");
    auto sorted = t_grid;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (!(sorted.front() < 1.0)) throw SpecError("upper_bound_check: t values must lie in (0, 1)");
    const auto hs = detail::parallel_map(sorted, cfg.threads,
                                         [&](double t) { return marginal_entropy(spec, t, EntropySource::Auto, cfg.density); });
    const double C = hs[0].value + std::log(1.0 / sorted[0]) / alpha_probe;
    ExperimentReport r;
    r.experiment_id = "upper_bound_check";
    r.spec_ids = {spec.id()};
    std::vector<double> h;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        h.push_back(hs[i].value);
        if (i == 0) continue;
        const double bound = -std::log(1.0 / sorted[i]) / alpha_probe + C;
        r.add(detail::label("bound_slack", "t", sorted[i]), bound - hs[i].value, 0.0,
              cfg.tolerances.get("slack", 2e-4), "slack", Comparison::AtLeast);
    }
    if (beta == 0.0) {
        const double t = sorted.back();
        r.add(detail::label("entropy_log_ratio", "t", t), hs.back().value / std::log(1.0 / t),
              spec.family() == Family::Gamma ? -10.0 : 0.0, 0.0, "entropy_log_ratio", Comparison::Below);
    }
    r.provenance = {{"t_grid", num12_array(sorted)}, {"alpha_probe", alpha_probe}, {"fitted_constant", num12(C)}};
    r.tables = {{"t", num12_array(sorted)}, {"entropy", num12_array(h)}};
    r.runtime_seconds = clock.seconds();
    return r;
}

/// A probe index strictly above β, three quarters of the way to 2 (2.4 for β = 2).
inline double default_alpha_probe(double beta) { return beta < 2.0 ? beta + 0.75 * (2.0 - beta) : 2.4; }

/// The three chains relating H_{n,m}, H_{n,1}, H_{1,m} and H_{1,1}.
inline ExperimentReport inequality_suite(const ProcessSpec& spec, const std::vector<int>& n_list,
                                         const std::vector<int>& m_list, const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    if (n_list.empty() || m_list.empty()) throw SpecError("inequality_suite: empty n or m list");
    std::vector<int> ns = n_list, ms = m_list;
    ns.push_back(1);
    ms.push_back(1);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    std::sort(ms.begin(), ms.end());
    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    std::vector<std::pair<int, int>> cells;
    for (int n : ns)
        for (int m : ms) cells.emplace_back(n, m);
    const auto H = detail::parallel_map(cells, cfg.threads, [&](const std::pair<int, int>& c) {
        return process_entropy(spec, c.first, c.second, cfg.density);
    });
    std::map<std::pair<int, int>, double> table;
    for (std::size_t i = 0; i < cells.size(); ++i) table[cells[i]] = H[i];

    struct Chain {
        const char* name;
        double worst = std::numeric_limits<double>::infinity();
        std::string where;
        void see(double slack, int n, int m) {
            if (slack < worst) {
                worst = slack;
                where = "n=" + std::to_string(n) + ",m=" + std::to_string(m);
            }
        }
    };
    Chain chains[] = {{"refinement_nonnegative"}, {"refinement_lower"}, {"refinement_upper"},
                      {"time_lower"},             {"time_upper"},       {"joint_lower"},
                      {"joint_upper"}};
    const double H11 = table[{1, 1}];
    for (auto [n, m] : cells) {
        const double Hnm = table[{n, m}], Hn1 = table[{n, 1}], H1m = table[{1, m}];
        const double ln = std::log(static_cast<double>(n)), lm = std::log(static_cast<double>(m));
        chains[0].see(Hn1, n, m);
        chains[1].see(Hnm - Hn1, n, m);
        chains[2].see(Hn1 + n * lm - Hnm, n, m);
        chains[3].see(Hnm - (H1m - ln), n, m);
        chains[4].see(n * H1m + n * ln - Hnm, n, m);
        chains[5].see(Hnm - (H11 - ln), n, m);
        chains[6].see(n * H11 + n * (ln + lm) - Hnm, n, m);
    }
    ExperimentReport r;
    r.experiment_id = "inequality_suite";
    r.spec_ids = {spec.id()};
    json worst_at = json::object();
    for (const auto& c : chains) {
        r.add(std::string("min_slack:") + c.name, c.worst, 0.0, cfg.tolerances.get("slack", 2e-4), "slack",
              Comparison::AtLeast);
        worst_at[c.name] = c.where;
    }
    json grid = json::array();
    for (std::size_t i = 0; i < cells.size(); ++i)
        grid.push_back({{"n", cells[i].first}, {"m", cells[i].second}, {"H", num12(H[i])}});
    r.provenance = {{"n_list", ns}, {"m_list", ms}};
    r.tables = {{"H_nm", grid}, {"worst_at", worst_at}};
    r.runtime_seconds = clock.seconds();
    return r;
}

/// t ↦ h(L_t) non-decreasing, and h(L_t) <= h(L_1) + ½ log(t/(1-t)) for t < 1.
inline ExperimentReport monotonicity_check(const ProcessSpec& spec, const std::vector<double>& t_grid,
                                           const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    auto sorted = t_grid;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() < 2) throw SpecError("monotonicity_check: need at least two t values");
    const auto hs = detail::parallel_map(sorted, cfg.threads,
                                         [&](double t) { return marginal_entropy(spec, t, EntropySource::Auto, cfg.density); });
    const double h1 = marginal_entropy(spec, 1.0, EntropySource::Auto, cfg.density).value;
    ExperimentReport r;
    r.experiment_id = "monotonicity";
    r.spec_ids = {spec.id()};
    const double slack = cfg.tolerances.get("slack", 2e-4);
    std::vector<double> h;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        h.push_back(hs[i].value);
        if (i > 0)
            r.add(detail::label("increment", "t", sorted[i]), hs[i].value - hs[i - 1].value, 0.0, slack, "slack",
                  Comparison::AtLeast);
        const double t = sorted[i];
        if (t < 1.0)
            r.add(detail::label("gaussian_bound_slack", "t", t), h1 + 0.5 * std::log(t / (1.0 - t)) - hs[i].value,
                  0.0, slack, "slack", Comparison::AtLeast);
    }
    r.provenance = {{"t_grid", num12_array(sorted)}};
    r.tables = {{"t", num12_array(sorted)}, {"entropy", num12_array(h)}, {"entropy_at_1", num12(h1)}};
    r.runtime_seconds = clock.seconds();
    return r;
}

/// Rényi gap H([L_t]_m) - log m - h(L_t) over doubling m; with check_size the gap at
/// the largest m is also held to the renyi_gap tolerance.
inline ExperimentReport renyi_check(const ProcessSpec& spec, double t, const std::vector<int>& m_list,
                                    const ExperimentConfig& cfg = {}, bool check_size = true) {
    detail::Stopwatch clock;
    auto ms = m_list;
    std::sort(ms.begin(), ms.end());
    if (ms.empty()) throw SpecError("renyi_check: empty m list");
    const auto hv = marginal_entropy(spec, t, EntropySource::Auto, cfg.density);
    const double h = hv.value;
    const double floor = cfg.tolerances.get("gap_monotone", 1e-7 + 2.0 * hv.err);
    const auto gaps = detail::parallel_map(ms, cfg.threads, [&](int m) {
        return discrete_entropy(quantized_law(spec, t, m, cfg.density)) - std::log(static_cast<double>(m)) - h;
    });
    ExperimentReport r;
    r.experiment_id = "renyi_gap";
    r.spec_ids = {spec.id()};
    for (std::size_t i = 1; i < ms.size(); ++i)
        r.add(detail::label("abs_gap_change", "m", ms[i]), std::abs(gaps[i]) - std::abs(gaps[i - 1]), 0.0,
              floor, "gap_monotone", Comparison::AtMost);
    if (check_size)
        r.add(detail::label("gap", "m", ms.back()), gaps.back(), 0.0, cfg.tolerances.get("renyi_gap", 1e-3),
              "renyi_gap", Comparison::AbsDiff);
    r.provenance = {{"t", t}, {"m_list", ms}};
    r.tables = {{"m", ms}, {"gap", num12_array(gaps)}, {"differential_entropy", num12(h)}};
    r.runtime_seconds = clock.seconds();
    return r;
}

/// h(W_t) from Fourier inversion against ½ log(2πe σ² t).
inline ExperimentReport gaussian_exactness(const ProcessSpec& spec, const std::vector<double>& t_grid,
                                           const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    double var1 = 0.0;
    if (spec.family() == Family::Wiener)
        var1 = spec.as<WienerParams>().sigma2;
    else if (spec.family() == Family::SaS && spec.as<SaSParams>().alpha == 2.0)
        var1 = 2.0 * spec.as<SaSParams>().gamma;
    else
        return skipped_report("gaussian_exactness", {spec.id()}, "not a Gaussian process");
    const auto hs = detail::parallel_map(t_grid, cfg.threads, [&](double t) {
        return marginal_entropy(spec, t, EntropySource::Density, cfg.density);
    });
    ExperimentReport r;
    r.experiment_id = "gaussian_exactness";
    r.spec_ids = {spec.id()};
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        r.add(detail::label("entropy", "t", t_grid[i]), hs[i].value, gaussian_entropy(var1 * t_grid[i]),
              cfg.tolerances.get("entropy", 1e-4), "entropy", Comparison::AbsDiff);
    r.provenance = {{"t_grid", num12_array(t_grid)}, {"density", detail::density_provenance(cfg.density)}};
    r.runtime_seconds = clock.seconds();
    return r;
}

/// Gamma process: tabulated-density entropy against the closed form where τt >= 1.2,
/// and the small-t expansion against the closed form.
inline ExperimentReport gamma_asymptotics(const ProcessSpec& spec, const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    if (spec.family() != Family::Gamma) return skipped_report("gamma_asymptotics", {spec.id()}, "not a gamma process");
    const auto& p = spec.as<GammaParams>();
    ExperimentReport r;
    r.experiment_id = "gamma_asymptotics";
    r.spec_ids = {spec.id()};
    const std::vector<double> shapes = {1.2, 1.5, 2.0, 3.0, 5.0};
    std::vector<double> ts;
    for (double k : shapes) ts.push_back(k / p.tau);
    const auto hs = detail::parallel_map(ts, cfg.threads, [&](double t) {
        return marginal_entropy(spec, t, EntropySource::Density, cfg.density);
    });
    for (std::size_t i = 0; i < ts.size(); ++i)
        r.add(detail::label("density_entropy", "t", ts[i]), hs[i].value, gamma_entropy_closed_form(p.theta, p.tau, ts[i]),
              cfg.tolerances.get("entropy", 1e-3), "entropy", Comparison::AbsDiff);
    const std::vector<double> small = {0.1, 0.05, 0.01};
    std::vector<double> gaps;
    for (double t : small)
        gaps.push_back(std::abs(gamma_entropy_closed_form(p.theta, p.tau, t) - gamma_entropy_asymptotic(p.theta, p.tau, t)));
    for (std::size_t i = 1; i < small.size(); ++i)
        r.add(detail::label("asymptotic_gap_change", "t", small[i]), gaps[i] - gaps[i - 1], 0.0, 0.0,
              "asymptotic_gap_change", Comparison::Below);
    r.add(detail::label("asymptotic_gap", "t", small.back()), gaps.back(), 0.0,
          cfg.tolerances.get("asymptotic_gap", 0.01), "asymptotic_gap", Comparison::AtMost);
    r.provenance = {{"density_t", num12_array(ts)}, {"asymptotic_t", num12_array(small)}};
    r.tables = {{"asymptotic_gap", num12_array(gaps)}};
    r.runtime_seconds = clock.seconds();
    return r;
}

/// Fractional moments E|t^{-1/β} L_t|^q: agreement across t, agreement with the
/// characteristic-function integral, and boundedness of the empirical maximum.
inline ExperimentReport moments_check(const ProcessSpec& spec, double q, const std::vector<double>& t_list,
                                      const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    const double beta = nominal_bg_index(spec);
    if (!is_samplable(spec))
        return skipped_report("fractional_moments", {spec.id()}, "no sampler for this family");
    if (beta == 0.0) return skipped_report("fractional_moments", {spec.id()}, "index 0: q < min(1, beta) is empty");
    if (q <= 0.0) q = 0.5 * std::min(1.0, beta);
    std::vector<MomentEstimate> emp;
    std::vector<MomentIntegral> integ;
    for (double t : t_list) {
        emp.push_back(fractional_moment_empirical(spec, t, beta, q, cfg.mc_draws, cfg.seed, cfg.threads));
        integ.push_back(fractional_moment_integral(spec, t, beta, q));
    }
    ExperimentReport r;
    r.experiment_id = "fractional_moments";
    r.spec_ids = {spec.id()};
    const double sig = cfg.tolerances.get("moment_sigma", 3.0);
    double max_emp = 0.0, max_int = 0.0;
    std::vector<double> em, es, iv;
    for (std::size_t i = 0; i < t_list.size(); ++i) {
        em.push_back(emp[i].mean);
        es.push_back(emp[i].stderr_);
        iv.push_back(integ[i].value);
        max_emp = std::max(max_emp, emp[i].mean);
        max_int = std::max(max_int, integ[i].value);
        if (i > 0) {
            const double se = std::hypot(emp[i].stderr_, emp[0].stderr_);
            r.add(detail::label("across_t_sigmas", "t", t_list[i]), std::abs(emp[i].mean - emp[0].mean) / se, 0.0, sig,
                  "moment_sigma", Comparison::AtMost);
        }
        r.add(detail::label("integral_sigmas", "t", t_list[i]), std::abs(integ[i].value - emp[i].mean) / emp[i].stderr_,
              0.0, sig, "moment_sigma", Comparison::AtMost);
    }
    r.add("bound_ratio", max_emp / max_int, 1.05, 0.0, "moment_bound", Comparison::AtMost);
    r.provenance = {{"t_list", num12_array(t_list)},
                    {"q", q},
                    {"beta", beta},
                    {"draws", cfg.mc_draws},
                    {"seed", cfg.seed},
                    {"c_q", num12(integ.front().c_q)}};
    r.tables = {{"empirical", num12_array(em)}, {"stderr", num12_array(es)}, {"integral", num12_array(iv)}};
    r.runtime_seconds = clock.seconds();
    return r;
}

struct HierarchyRow {
    std::string family;
    std::string spec_id;
    double beta_hat = 0.0;
    double beta = 0.0;
    double slope = 0.0;
    double entropy = 0.0;
};

/// Rows of (family, β̂, fitted slope, h(L_{t*})) sorted from most to least compressible.
inline std::vector<HierarchyRow> hierarchy_rows(const std::vector<ProcessSpec>& specs, double t_star,
                                                const ExperimentConfig& cfg = {}) {
    const auto grid = default_t_grid();
    auto rows = detail::parallel_map(specs, cfg.threads, [&](const ProcessSpec& s) {
        HierarchyRow row;
        row.family = family_name(s.family());
        row.spec_id = s.id();
        row.beta_hat = estimate_bg_index(s).beta_hat;
        row.beta = nominal_bg_index(s);
        std::vector<double> lt, h;
        for (double t : grid) {
            lt.push_back(std::log(t));
            h.push_back(marginal_entropy(s, t, EntropySource::Auto, cfg.density).value);
        }
        row.slope = detail::fit_line(lt, h).slope;
        row.entropy = marginal_entropy(s, t_star, EntropySource::Auto, cfg.density).value;
        return row;
    });
    std::stable_sort(rows.begin(), rows.end(), [](const HierarchyRow& a, const HierarchyRow& b) {
        return a.beta_hat < b.beta_hat || (a.beta_hat == b.beta_hat && a.entropy < b.entropy);
    });
    return rows;
}

inline void write_hierarchy_csv(std::ostream& os, const std::vector<HierarchyRow>& rows) {
    const auto old = os.precision(12);
    os << "family,spec_id,beta_hat,beta,slope,entropy\n";
    for (const auto& r : rows)
        os << r.family << ",\"" << r.spec_id << "\"," << r.beta_hat << ',' << r.beta << ',' << r.slope << ','
           << r.entropy << '\n';
    os.precision(old);
}

/// Compressibility hierarchy at t*: β̂ against the exact index, and the ordering
/// gamma < SaS(0.5) < SaS(1) < Wiener of h(L_{t*}) among the specs present.
inline ExperimentReport hierarchy_table(const std::vector<ProcessSpec>& specs, double t_star,
                                        const ExperimentConfig& cfg = {}) {
    detail::Stopwatch clock;
    const auto rows = hierarchy_rows(specs, t_star, cfg);
    ExperimentReport r;
    r.experiment_id = "hierarchy_table";
    for (const auto& s : specs) r.spec_ids.push_back(s.id());
    for (const auto& row : rows)
        r.add("beta_hat:" + row.spec_id, row.beta_hat, row.beta, cfg.tolerances.get("bg_index", 0.05), "bg_index",
              Comparison::AbsDiff);
    // first spec of each rung of the reference ladder
    auto find = [&](auto pred) -> const HierarchyRow* {
        for (std::size_t i = 0; i < specs.size(); ++i)
            if (pred(specs[i]))
                for (const auto& row : rows)
                    if (row.spec_id == specs[i].id()) return &row;
        return nullptr;
    };
    auto sas_with = [](double a) {
        return [a](const ProcessSpec& s) { return s.family() == Family::SaS && s.as<SaSParams>().alpha == a; };
    };
    const HierarchyRow* ladder[] = {find([](const ProcessSpec& s) { return s.family() == Family::Gamma; }),
                                    find(sas_with(0.5)), find(sas_with(1.0)),
                                    find([](const ProcessSpec& s) { return s.family() == Family::Wiener; })};
    const HierarchyRow* prev = nullptr;
    for (const auto* rung : ladder) {
        if (!rung) continue;
        if (prev)
            r.add("ordering:" + prev->spec_id + "<" + rung->spec_id, prev->entropy - rung->entropy, 0.0, 0.0, "ordering",
                  Comparison::Below);
        prev = rung;
    }
    json table = json::array();
    for (const auto& row : rows)
        table.push_back({{"family", row.family},
                         {"spec_id", row.spec_id},
                         {"beta_hat", num12(row.beta_hat)},
                         {"beta", num12(row.beta)},
                         {"slope", num12(row.slope)},
                         {"entropy", num12(row.entropy)}});
    r.tables = {{"rows", table}};
    r.provenance = {{"t_star", t_star}, {"slope_t_grid", num12_array(default_t_grid())}};
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// suites

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"gaussian", "gamma",      "slope",     "lss",
                                                   "bound",    "inequality", "monotonicity", "renyi",
                                                   "moments",  "hierarchy",  "all"};
    return names;
}

namespace detail {

inline ExperimentReport guarded(const std::string& id, const ProcessSpec& spec,
                                const std::function<ExperimentReport()>& run) {
    try {
        return run();
    } catch (const UnsupportedFamilyError& e) {
        return skipped_report(id, {spec.id()}, e.what());
    }
}

}  // namespace detail

/// Runs a named suite over the given specs; suites not meaningful for a spec
/// yield skipped entries with a reason.
inline std::vector<ExperimentReport> run_suite(const std::string& suite, const std::vector<ProcessSpec>& specs,
                                               const ExperimentConfig& cfg = {}) {
    if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
        throw SpecError("unknown suite '" + suite + "'");
    std::vector<ExperimentReport> out;
    const bool all = suite == "all";
    const std::vector<int> nm = {1, 2, 4, 8};
    for (const auto& s : specs) {
        const double beta = nominal_bg_index(s);
        if (all || suite == "gaussian")
            out.push_back(detail::guarded("gaussian_exactness", s, [&] {
                return gaussian_exactness(s, geometric_grid(0.5, 0.5, 10), cfg);
            }));
        if (all || suite == "gamma")
            out.push_back(detail::guarded("gamma_asymptotics", s, [&] { return gamma_asymptotics(s, cfg); }));
        if (all || suite == "slope")
            out.push_back(detail::guarded("entropy_slope", s, [&] { return entropy_slope(s, default_t_grid(), cfg); }));
        if (all || suite == "lss")
            out.push_back(detail::guarded("lss_convergence", s, [&] {
                return lss_convergence(s, beta, {1e-1, 1e-2, 1e-3}, cfg);
            }));
        if (all || suite == "bound")
            out.push_back(detail::guarded("upper_bound_check", s, [&] {
                return upper_bound_check(s, default_alpha_probe(beta), {0.1, 0.05, 0.02, 0.01}, cfg);
            }));
        if (all || suite == "inequality")
            out.push_back(detail::guarded("inequality_suite", s, [&] { return inequality_suite(s, nm, nm, cfg); }));
        if (all || suite == "monotonicity")
            out.push_back(detail::guarded("monotonicity", s, [&] {
                return monotonicity_check(s, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}, cfg);
            }));
        if (all || suite == "renyi")
            for (double t : {0.5, 1.0})
                out.push_back(detail::guarded("renyi_gap", s, [&] {
                    std::vector<int> ms;
                    for (int m = 16; m <= 4096; m *= 2) ms.push_back(m);
                    return renyi_check(s, t, ms, cfg, t == 1.0);
                }));
        if (all || suite == "moments")
            out.push_back(detail::guarded("fractional_moments", s, [&] {
                return moments_check(s, 0.0, {1.0, 0.1, 0.01}, cfg);
            }));
    }
    if (all || suite == "hierarchy") out.push_back(hierarchy_table(specs, 0.01, cfg));
    return out;
}

}  // namespace levy
