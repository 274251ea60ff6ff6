// levy_entropy: command-line front end for the levy library.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <levy/levy.hpp>

namespace {

using levy::json;

enum Exit { kOk = 0, kVerifyFailed = 1, kInputError = 2, kNumericalError = 3 };

/// Everything that determines a command's output. Thread count is not part of
/// it because results do not depend on it.
struct RunConfig {
    std::string command;
    json spec;  // null: built-in catalogue
    std::string suite = "all";
    std::vector<double> t_grid;
    std::vector<int> n_list;
    std::vector<int> m_list;
    std::vector<double> xi_grid;
    std::string out;
    std::uint64_t seed = 20240601;
    std::size_t points = 0;
    std::size_t count = 100000;
    std::string format = "csv";
    std::map<std::string, double> tolerances;
    bool no_timestamp = false;
};

json to_json(const RunConfig& c) {
    json tol = json::object();
    for (const auto& [k, v] : c.tolerances) tol[k] = v;
    return {{"command", c.command}, {"spec", c.spec},        {"suite", c.suite},   {"t_grid", c.t_grid},
            {"n_list", c.n_list},   {"m_list", c.m_list},    {"xi_grid", c.xi_grid}, {"out", c.out},
            {"seed", c.seed},       {"points", c.points},    {"count", c.count},   {"format", c.format},
            {"tolerances", tol},    {"no_timestamp", c.no_timestamp}};
}

RunConfig config_from_json(const json& j) {
    static const std::set<std::string> known = {"command", "spec",  "suite", "t_grid", "n_list",
                                                "m_list",  "xi_grid", "out", "seed",   "points",
                                                "count",   "format", "tolerances", "no_timestamp"};
    if (!j.is_object()) throw levy::SpecError("run config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw levy::SpecError("run config: unknown key \"" + k + "\"");
    RunConfig c;
    c.command = j.value("command", "");
    c.spec = j.value("spec", json());
    c.suite = j.value("suite", c.suite);
    c.t_grid = j.value("t_grid", c.t_grid);
    c.n_list = j.value("n_list", c.n_list);
    c.m_list = j.value("m_list", c.m_list);
    c.xi_grid = j.value("xi_grid", c.xi_grid);
    c.out = j.value("out", c.out);
    c.seed = j.value("seed", c.seed);
    c.points = j.value("points", c.points);
    c.count = j.value("count", c.count);
    c.format = j.value("format", c.format);
    c.tolerances = j.value("tolerances", c.tolerances);
    c.no_timestamp = j.value("no_timestamp", c.no_timestamp);
    return c;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw levy::SpecError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw levy::SpecError(path + ": " + e.what());
    }
}

/// --spec accepts inline JSON, "builtin", or a file path.
json load_spec_arg(const std::string& arg) {
    if (arg == "builtin" || arg == "builtins") {
        json a = json::array();
        for (const auto& s : levy::builtin_specs()) a.push_back(levy::spec_to_json(s));
        return a;
    }
    const auto first = arg.find_first_not_of(" \t\n");
    if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
        try {
            return json::parse(arg);
        } catch (const json::parse_error& e) {
            throw levy::SpecError(std::string("--spec: ") + e.what());
        }
    }
    return read_json_file(arg);
}

std::vector<levy::ProcessSpec> specs_of(const RunConfig& c) {
    if (c.spec.is_null()) return levy::builtin_specs();
    return levy::specs_from_json(c.spec);
}

levy::ProcessSpec single_spec(const RunConfig& c) {
    if (c.spec.is_null()) throw levy::SpecError(c.command + ": --spec is required");
    const auto specs = levy::specs_from_json(c.spec);
    if (specs.size() != 1) throw levy::SpecError(c.command + ": expects exactly one process spec");
    return specs.front();
}

double single_t(const RunConfig& c, double fallback) {
    if (c.t_grid.empty()) return fallback;
    if (c.t_grid.size() != 1) throw levy::SpecError(c.command + ": expects a single t");
    return c.t_grid.front();
}

class Output {
public:
    Output(const std::string& path, bool binary) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary : std::ios::out);
        if (!*file_) throw levy::SpecError("cannot write " + path);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void write_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// commands

int cmd_describe(const RunConfig& c) {
    std::vector<double> xi = c.xi_grid;
    if (xi.empty()) xi = {0.01, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6};
    std::vector<double> sector_grid;
    for (double x : xi)
        if (std::abs(x) >= 1.0) sector_grid.push_back(x);
    if (c.xi_grid.empty() || sector_grid.empty()) {
        sector_grid.clear();
        for (int k = 1; k <= 100; ++k) sector_grid.push_back(k);
    }
    json out = json::array();
    for (const auto& spec : specs_of(c)) {
        json psi = json::array();
        for (double x : xi) {
            const auto e = levy::char_exponent(spec, x);
            psi.push_back({{"xi", levy::num12(x)},
                           {"re", levy::num12(e.psi.real())},
                           {"im", levy::num12(e.psi.imag())},
                           {"abs_err", levy::num12(e.abs_err)},
                           {"method", levy::method_name(e.method)}});
        }
        const auto sector = levy::check_sector(spec, sector_grid);
        const auto bg = levy::estimate_bg_index(spec);
        json d = {{"spec_id", spec.id()},
                  {"spec", levy::spec_to_json(spec)},
                  {"symmetric", spec.symmetric()},
                  {"psi", psi},
                  {"sector",
                   {{"satisfied", sector.satisfied},
                    {"c_hat", levy::num12(sector.c_hat)},
                    {"xi_min", levy::num12(sector_grid.front())},
                    {"xi_max", levy::num12(sector_grid.back())},
                    {"points", sector_grid.size()}}},
                  {"beta_hat", levy::num12(bg.beta_hat)},
                  {"beta", levy::num12(levy::nominal_bg_index(spec))},
                  {"bg_fit",
                   {{"xi_min", levy::num12(bg.xi_min)},
                    {"xi_max", levy::num12(bg.xi_max)},
                    {"raw_slope", levy::num12(bg.raw_slope)},
                    {"r_squared", levy::num12(bg.r_squared)}}}};
        if (!sector.diagnostic.empty()) d["sector"]["diagnostic"] = sector.diagnostic;
        if (levy::nominal_bg_index(spec) > 0.0) d["limit_gamma"] = levy::num12(levy::stable_limit_constant(spec));
        out.push_back(std::move(d));
    }
    Output o(c.out, false);
    write_json(o.stream(), out.size() == 1 ? out.front() : out);
    return kOk;
}

int cmd_density(const RunConfig& c) {
    const auto spec = single_spec(c);
    const double t = single_t(c, 1.0);
    levy::DensityOptions opt;
    opt.n_points = c.points;
    const auto grid = levy::marginal_density(spec, t, opt);
    Output o(c.out, false);
    auto& os = o.stream();
    os.precision(12);
    os << "x,pdf\n";
    for (std::size_t j = 0; j < grid.size(); ++j) os << grid.x(j) << ',' << grid.values[j] << '\n';
    if (grid.flagged)
        std::cerr << "warning: clipped negative mass " << grid.clipped_mass << " exceeds the flag threshold\n";
    return kOk;
}

int cmd_entropy(const RunConfig& c, unsigned threads) {
    const auto spec = single_spec(c);
    levy::DensityOptions opt;
    opt.n_points = c.points;
    levy::EntropyCurve curve;
    curve.spec_id = spec.id();
    if (!c.n_list.empty()) {
        if (c.m_list.empty()) throw levy::SpecError("entropy: --n requires --m");
        std::vector<std::pair<int, int>> nm;
        for (int n : c.n_list)
            for (int m : c.m_list) nm.emplace_back(n, m);
        const auto vals = levy::detail::parallel_map(nm, threads, [&](const std::pair<int, int>& p) {
            return levy::process_entropy(spec, p.first, p.second, opt);
        });
        for (std::size_t i = 0; i < nm.size(); ++i) {
            levy::EntropyPoint pt;
            pt.abscissa = nm[i].first;
            pt.n = nm[i].first;
            pt.m = nm[i].second;
            pt.value = vals[i];
            pt.method = "process";
            curve.points.push_back(pt);
        }
    } else {
        const auto grid = c.t_grid.empty() ? levy::default_t_grid() : c.t_grid;
        std::vector<int> ms = c.m_list.empty() ? std::vector<int>{0} : c.m_list;
        std::vector<std::pair<double, int>> jobs;
        for (double t : grid)
            for (int m : ms) jobs.emplace_back(t, m);
        const auto parts = levy::detail::parallel_map(jobs, threads, [&](const std::pair<double, int>& j) {
            return levy::entropy_curve(spec, {j.first}, j.second, opt);
        });
        for (const auto& p : parts) curve.points.insert(curve.points.end(), p.points.begin(), p.points.end());
    }
    curve.sort();
    Output o(c.out, false);
    curve.write_csv(o.stream());
    return kOk;
}

int cmd_sample(const RunConfig& c, unsigned threads) {
    const auto spec = single_spec(c);
    const double t = single_t(c, 1.0);
    if (c.format != "csv" && c.format != "bin") throw levy::SpecError("sample: --format must be csv or bin");
    const auto batch = levy::sample_increments(spec, t, c.count, c.seed, threads);
    Output o(c.out, c.format == "bin");
    if (c.format == "bin")
        levy::write_binary(o.stream(), batch);
    else
        levy::write_csv(o.stream(), batch);
    return kOk;
}

levy::ExperimentConfig experiment_config(const RunConfig& c, unsigned threads) {
    levy::ExperimentConfig cfg;
    for (const auto& [k, v] : c.tolerances) cfg.tolerances.set(k, v);
    cfg.threads = threads;
    cfg.seed = c.seed;
    cfg.density.n_points = c.points;
    return cfg;
}

void warn_unused_tolerances(const RunConfig& c, const std::vector<levy::ExperimentReport>& reports) {
    std::set<std::string> used;
    for (const auto& r : reports)
        for (const auto& m : r.metrics) used.insert(m.tolerance_key);
    for (const auto& [k, v] : c.tolerances)
        if (!used.count(k)) std::cerr << "warning: tolerance key '" << k << "' matched no metric\n";
}

int cmd_verify(const RunConfig& c, unsigned threads) {
    const auto specs = specs_of(c);
    const auto reports = levy::run_suite(c.suite, specs, experiment_config(c, threads));
    levy::ReportOptions ro;
    ro.deterministic = c.no_timestamp;
    bool ok = true;
    json arr = json::array();
    for (const auto& r : reports) {
        arr.push_back(levy::report_to_json(r, ro));
        const auto st = r.status();
        ok = ok && st != levy::ReportStatus::Fail;
        std::cerr << levy::status_name(st) << "  " << r.experiment_id;
        if (r.spec_ids.size() == 1) std::cerr << "  " << r.spec_ids.front();
        if (r.skipped) std::cerr << "  (" << r.skip_reason << ")";
        for (const auto& f : r.failing_metrics()) std::cerr << "  FAIL " << f;
        std::cerr << '\n';
    }
    warn_unused_tolerances(c, reports);
    json doc = {{"schema_version", levy::kReportSchemaVersion},
                {"suite", c.suite},
                {"status", ok ? "pass" : "fail"},
                {"reports", arr}};
    Output o(c.out, false);
    write_json(o.stream(), doc);
    return ok ? kOk : kVerifyFailed;
}

int cmd_table(const RunConfig& c, unsigned threads) {
    const auto specs = specs_of(c);
    const double t_star = single_t(c, 0.01);
    const auto rows = levy::hierarchy_rows(specs, t_star, experiment_config(c, threads));
    Output o(c.out, false);
    levy::write_hierarchy_csv(o.stream(), rows);
    return kOk;
}

int dispatch(const RunConfig& c, unsigned threads) {
    if (c.command == "describe") return cmd_describe(c);
    if (c.command == "density") return cmd_density(c);
    if (c.command == "entropy") return cmd_entropy(c, threads);
    if (c.command == "sample") return cmd_sample(c, threads);
    if (c.command == "verify") return cmd_verify(c, threads);
    if (c.command == "table") return cmd_table(c, threads);
    throw levy::SpecError("unknown command '" + c.command + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropic compressibility of Lévy processes"};
    app.require_subcommand(1);

    RunConfig cli;
    std::string spec_arg, config_path, save_config;
    std::vector<std::string> tolerance_args;
    unsigned threads = 1;

    // Registered options per subcommand, so --config can be overridden by flags
    // given explicitly on the command line.
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

    auto common = [&](CLI::App* sub) {
        overrides.emplace_back(sub->add_option("--spec", spec_arg, "Process spec: JSON file, inline JSON, or 'builtin'"),
                               [&](RunConfig& r) { r.spec = load_spec_arg(spec_arg); });
        overrides.emplace_back(sub->add_option("--out", cli.out, "Output file (default stdout)"),
                               [&](RunConfig& r) { r.out = cli.out; });
        sub->add_option("--threads", threads, "Worker threads")
            ->envname("LEVY_ENTROPY_THREADS")
            ->check(CLI::Range(1u, 1024u));
        sub->add_option("--config", config_path, "Load a saved run config (JSON)");
        sub->add_option("--save-config", save_config, "Write the effective run config (JSON) and continue");
    };
    auto t_grid = [&](CLI::App* sub, const char* help) {
        overrides.emplace_back(sub->add_option("--t-grid", cli.t_grid, help)->delimiter(','),
                               [&](RunConfig& r) { r.t_grid = cli.t_grid; });
    };
    auto seed = [&](CLI::App* sub) {
        overrides.emplace_back(sub->add_option("--seed", cli.seed, "64-bit seed"),
                               [&](RunConfig& r) { r.seed = cli.seed; });
    };
    auto points = [&](CLI::App* sub) {
        overrides.emplace_back(sub->add_option("--points", cli.points, "Density grid size (0 = automatic)"),
                               [&](RunConfig& r) { r.points = cli.points; });
    };

    auto* describe = app.add_subcommand("describe", "Exponent samples, sector check and index estimate");
    common(describe);
    overrides.emplace_back(describe->add_option("--xi-grid", cli.xi_grid, "Frequencies for exponent samples")
                               ->delimiter(','),
                           [&](RunConfig& r) { r.xi_grid = cli.xi_grid; });

    auto* density = app.add_subcommand("density", "Tabulated density of L_t as CSV (x,pdf)");
    common(density);
    t_grid(density, "Time t (single value)");
    points(density);

    auto* entropy = app.add_subcommand("entropy", "Entropy curve as CSV");
    common(entropy);
    t_grid(entropy, "Comma-separated times");
    points(entropy);
    overrides.emplace_back(entropy->add_option("--n", cli.n_list, "Sampling rates n for H_{n,m}")->delimiter(','),
                           [&](RunConfig& r) { r.n_list = cli.n_list; });
    overrides.emplace_back(entropy->add_option("--m", cli.m_list, "Quantization orders m")->delimiter(','),
                           [&](RunConfig& r) { r.m_list = cli.m_list; });

    auto* sample = app.add_subcommand("sample", "Draw increments of L_t");
    common(sample);
    t_grid(sample, "Time t (single value)");
    seed(sample);
    overrides.emplace_back(sample->add_option("--count", cli.count, "Number of draws")->check(CLI::PositiveNumber),
                           [&](RunConfig& r) { r.count = cli.count; });
    overrides.emplace_back(
        sample->add_option("--format", cli.format, "csv or bin")->check(CLI::IsMember({"csv", "bin"})),
        [&](RunConfig& r) { r.format = cli.format; });

    auto* verify = app.add_subcommand("verify", "Run an experiment suite and emit JSON reports");
    common(verify);
    seed(verify);
    points(verify);
    overrides.emplace_back(verify->add_option("suite", cli.suite, "Suite name")
                               ->check(CLI::IsMember(levy::suite_names())),
                           [&](RunConfig& r) { r.suite = cli.suite; });
    overrides.emplace_back(verify->add_option("--tolerance", tolerance_args, "Tolerance override KEY=VAL"),
                           [&](RunConfig& r) {
                               levy::Tolerances tol;
                               for (const auto& kv : tolerance_args) tol.parse(kv);
                               for (const auto& [k, v] : tol.values()) r.tolerances[k] = v;
                           });
    overrides.emplace_back(verify->add_flag("--no-timestamp", cli.no_timestamp, "Omit timestamp and runtime"),
                           [&](RunConfig& r) { r.no_timestamp = cli.no_timestamp; });

    auto* table = app.add_subcommand("table", "Compressibility hierarchy as CSV");
    common(table);
    t_grid(table, "Evaluation time t* (single value)");
    points(table);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInputError;
    }

    try {
        RunConfig run;
        if (!config_path.empty()) run = config_from_json(read_json_file(config_path));
        for (auto* sub : app.get_subcommands()) run.command = sub->get_name();
        if (!config_path.empty() && !run.command.empty()) {
            const auto saved = config_from_json(read_json_file(config_path)).command;
            if (!saved.empty() && saved != run.command)
                throw levy::SpecError("run config is for '" + saved + "', not '" + run.command + "'");
        }
        for (auto& [opt, apply] : overrides)
            if (opt->count() > 0) apply(run);
        if (!save_config.empty()) {
            std::ofstream f(save_config);
            if (!f) throw levy::SpecError("cannot write " + save_config);
            write_json(f, to_json(run));
        }
        return dispatch(run, threads);
    } catch (const levy::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const json::exception& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericalError;
    }
}
