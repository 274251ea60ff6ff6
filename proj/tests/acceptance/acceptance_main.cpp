// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--cli PATH] [--expect-fail 2,3] [--threads N]
//
// Exit status is 0 when the set of failing criteria equals the --expect-fail set
// (empty by default).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <levy/levy.hpp>

using namespace levy;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void need(bool ok, std::string what) {
        if (!ok) pass = false;
        notes.push_back((ok ? "" : "FAILED ") + std::move(what));
    }
    // every metric whose name starts with one of the prefixes must pass
    void need_metrics(const ExperimentReport& r, const std::vector<std::string>& prefixes) {
        for (const auto& m : r.metrics) {
            bool wanted = prefixes.empty();
            for (const auto& p : prefixes) wanted = wanted || m.name.rfind(p, 0) == 0;
            if (!wanted) continue;
            std::ostringstream os;
            os.precision(6);
            os << r.spec_ids.front() << " " << m.name << " = " << m.value << " (" << comparison_name(m.comparison)
               << " target " << m.target << ", tol " << m.tolerance << ")";
            need(metric_passes(m), os.str());
        }
    }
};

ProcessSpec builtin(const std::string& id) {
    for (const auto& s : builtin_specs())
        if (s.id() == id) return s;
    throw std::runtime_error("no built-in " + id);
}

std::vector<int> doubling(int from, int to) {
    std::vector<int> v;
    for (int m = from; m <= to; m *= 2) v.push_back(m);
    return v;
}

Outcome gaussian_exactness_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    o.need_metrics(gaussian_exactness(ProcessSpec::wiener(1.0, 0.0), default_t_grid(), cfg), {"entropy"});
    return o;
}

Outcome gamma_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    o.need_metrics(gamma_asymptotics(ProcessSpec::gamma_process(1.0, 1.0), cfg), {});
    return o;
}

Outcome slope_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    for (double a : {0.5, 1.0, 1.5, 2.0}) {
        ExperimentConfig c = cfg;
        c.tolerances.set("slope", 0.02);
        o.need_metrics(entropy_slope(ProcessSpec::sas(a, 1.0), default_t_grid(), c), {"slope"});
    }
    for (const char* id : {"layered_stable:0.8,1.6,1,1", "tempered_stable:1.2,1,1,1"}) {
        ExperimentConfig c = cfg;
        c.tolerances.set("slope", 0.05);
        o.need_metrics(entropy_slope(builtin(id), default_t_grid(), c), {"slope"});
    }
    return o;
}

Outcome renyi_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    ExperimentConfig c = cfg;
    c.tolerances.set("gap_monotone", 0.0);
    c.tolerances.set("renyi_gap", 1e-3);
    for (const auto& s : {ProcessSpec::wiener(1.0, 0.0), ProcessSpec::gamma_process(1.0, 1.0), ProcessSpec::sas(1.0, 1.0)})
        o.need_metrics(renyi_check(s, 1.0, doubling(16, 4096), c), {});
    return o;
}

Outcome inequality_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    const std::vector<int> nm = {1, 2, 4, 8};
    for (const auto& s : {ProcessSpec::wiener(1.0, 0.0), ProcessSpec::gamma_process(1.0, 1.0), ProcessSpec::sas(1.5, 1.0)})
        o.need_metrics(inequality_suite(s, nm, nm, cfg), {});
    return o;
}

Outcome monotonicity_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    const std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    for (const auto& s : builtin_specs()) o.need_metrics(monotonicity_check(s, grid, cfg), {"increment"});
    return o;
}

Outcome divergence_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    const auto r = upper_bound_check(ProcessSpec::gamma_process(1.0, 1.0), default_alpha_probe(0.0), {0.1, 0.05, 0.02, 0.01}, cfg);
    o.need_metrics(r, {"entropy_log_ratio"});
    return o;
}

Outcome moments_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    ExperimentConfig c = cfg;
    c.tolerances.set("moment_sigma", 3.0);
    o.need_metrics(moments_check(ProcessSpec::sas(1.5, 1.0), 0.5, {1.0, 0.1, 0.01}, c),
                   {"across_t_sigmas", "integral_sigmas"});
    return o;
}

Outcome local_limit_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    const std::vector<double> ts = {1e-1, 1e-2, 1e-3};
    for (const char* id : {"layered_stable:0.8,1.6,1,1", "tempered_stable:1.2,1,1,1"}) {
        const auto s = builtin(id);
        o.need_metrics(lss_convergence(s, nominal_bg_index(s), ts, cfg), {"sup_norm_change"});
    }
    ExperimentConfig c = cfg;
    c.tolerances.set("sup_norm", 1e-8);
    for (const auto& s : builtin_specs())
        if (s.family() == Family::SaS) o.need_metrics(lss_convergence(s, nominal_bg_index(s), ts, c), {"sup_norm["});
    return o;
}

Outcome hierarchy_criterion(const ExperimentConfig& cfg) {
    Outcome o;
    const std::vector<ProcessSpec> ladder = {ProcessSpec::gamma_process(1.0, 1.0), ProcessSpec::sas(0.5, 1.0),
                                             ProcessSpec::sas(1.0, 1.0), ProcessSpec::wiener(1.0, 0.0)};
    ExperimentConfig c = cfg;
    c.tolerances.set("bg_index", 0.05);
    o.need_metrics(hierarchy_table(ladder, 0.01, c), {"ordering:", "beta_hat:"});
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism_criterion(const std::string& cli) {
    Outcome o;
    if (cli.empty() || !std::filesystem::exists(cli)) {
        o.need(false, "command-line tool not found (pass --cli PATH)");
        return o;
    }
    const auto dir = std::filesystem::temp_directory_path() / ("levy_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    for (const char* suite : {"moments", "inequality", "lss"}) {
        std::string outputs[2];
        for (int run = 0; run < 2; ++run) {
            const auto out = dir / (std::string(suite) + "_" + std::to_string(run) + ".json");
            // the second run uses a different thread count
            const std::string cmd = "\"" + cli + "\" verify " + suite + " --spec builtin --seed 20240601 --no-timestamp" +
                                    " --threads " + (run == 0 ? "1" : "3") + " --out \"" + out.string() +
                                    "\" 2>/dev/null";
            const int rc = std::system(cmd.c_str());
            o.need(rc != -1 && std::filesystem::exists(out), std::string("verify ") + suite + " run " +
                                                                 std::to_string(run + 1) + " produced a report");
            outputs[run] = slurp(out);
        }
        o.need(!outputs[0].empty() && outputs[0] == outputs[1],
               std::string("verify ") + suite + ": byte-identical reports (" + std::to_string(outputs[0].size()) +
                   " bytes)");
    }
    std::filesystem::remove_all(dir);
    return o;
}

std::set<int> parse_set(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    std::set<int> expected;
    ExperimentConfig cfg;
    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--cli" && i + 1 < argc)
            cli = argv[++i];
        else if (a == "--expect-fail" && i + 1 < argc)
            expected = parse_set(argv[++i]);
        else if (a == "--threads" && i + 1 < argc)
            cfg.threads = static_cast<unsigned>(std::stoul(argv[++i]));
        else {
            std::cerr << "usage: " << argv[0] << " [--cli PATH] [--expect-fail LIST] [--threads N]\n";
            return 2;
        }
    }

    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "Gaussian exactness of FFT entropy", [&] { return gaussian_exactness_criterion(cfg); }},
        {2, "Gamma closed form and small-t expansion", [&] { return gamma_criterion(cfg); }},
        {3, "Entropy slopes equal 1/beta", [&] { return slope_criterion(cfg); }},
        {4, "Renyi expansion of quantized entropy", [&] { return renyi_criterion(cfg); }},
        {5, "Inequality chains for H_{n,m}", [&] { return inequality_criterion(cfg); }},
        {6, "Monotonicity of t -> h(L_t)", [&] { return monotonicity_criterion(cfg); }},
        {7, "Index-0 divergence for gamma", [&] { return divergence_criterion(cfg); }},
        {8, "Fractional moments of rescaled increments", [&] { return moments_criterion(cfg); }},
        {9, "Local limit convergence", [&] { return local_limit_criterion(cfg); }},
        {10, "Compressibility hierarchy", [&] { return hierarchy_criterion(cfg); }},
        {11, "Deterministic verify reports", [&] { return determinism_criterion(cli); }},
    };

    std::set<int> failed;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.need(false, std::string("exception: ") + e.what());
        }
        if (!o.pass) failed.insert(c.id);
        std::printf("%s  %2d  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title);
        for (const auto& n : o.notes) std::printf("          %s\n", n.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu of %zu criteria pass\n", criteria.size() - failed.size(), criteria.size());
    if (failed != expected) {
        for (int id : failed)
            if (!expected.count(id)) std::printf("unexpected failure: %d\n", id);
        for (int id : expected)
            if (!failed.count(id)) std::printf("expected failure now passes: %d\n", id);
        return 1;
    }
    return 0;
}
