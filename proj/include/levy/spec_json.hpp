#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "process_model.hpp"

namespace levy {

using json = nlohmann::json;

inline double round12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

/// 12 significant digits; non-finite values become the strings "inf", "-inf", "nan".
inline json num12(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return round12(v);
}

/// Inverse of num12 for persisted reports.
inline double from_num(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return INFINITY;
        if (s == "-inf") return -INFINITY;
        if (s == "nan") return NAN;
        throw SpecError("expected a number, got \"" + s + "\"");
    }
    if (!j.is_number()) throw SpecError("expected a number");
    return j.get<double>();
}

namespace detail {

inline double param(const json& params, const char* key, std::set<std::string>& used) {
    used.insert(key);
    if (!params.contains(key)) throw SpecError(std::string("process spec: missing parameter \"") + key + "\"");
    const auto& v = params.at(key);
    if (!v.is_number()) throw SpecError(std::string("process spec: parameter \"") + key + "\" must be a number");
    return v.get<double>();
}

}  // namespace detail

/// {"family": "sas", "params": {"alpha": 1.5, "gamma": 1}}.
inline ProcessSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw SpecError("process spec must be a JSON object");
    if (!j.contains("family") || !j.at("family").is_string()) throw SpecError("process spec: missing \"family\"");
    for (const auto& [k, v] : j.items())
        if (k != "family" && k != "params" && k != "name") throw SpecError("process spec: unknown key \"" + k + "\"");
    const Family f = family_from_name(j.at("family").get<std::string>());
    const json params = j.value("params", json::object());
    if (!params.is_object()) throw SpecError("process spec: \"params\" must be an object");
    std::set<std::string> used;
    auto get = [&](const char* key) { return detail::param(params, key, used); };
    ProcessSpec spec = [&] {
        switch (f) {
            case Family::Wiener: {
                used.insert("mu");
                const double mu = params.contains("mu") ? detail::param(params, "mu", used) : 0.0;
                return ProcessSpec::wiener(get("sigma2"), mu);
            }
            case Family::SaS: return ProcessSpec::sas(get("alpha"), get("gamma"));
            case Family::Gamma: return ProcessSpec::gamma_process(get("theta"), get("tau"));
            case Family::Laplace: return ProcessSpec::laplace(get("scale"));
            case Family::LayeredStable:
                return ProcessSpec::layered_stable(get("alpha0"), get("alpha_inf"), get("a0"), get("a_inf"));
            case Family::TemperedStable:
                return ProcessSpec::tempered_stable(get("alpha"), get("p"), get("lambda"), get("c"));
        }
        throw SpecError("process spec: unknown family");
    }();
    for (const auto& [k, v] : params.items())
        if (!used.count(k)) throw SpecError("process spec: unknown parameter \"" + k + "\" for family " +
                                            family_name(f));
    return spec;
}

/// A single spec object or an array of them.
inline std::vector<ProcessSpec> specs_from_json(const json& j) {
    std::vector<ProcessSpec> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(spec_from_json(e));
        if (out.empty()) throw SpecError("spec list is empty");
    } else {
        out.push_back(spec_from_json(j));
    }
    return out;
}

inline json spec_to_json(const ProcessSpec& spec) {
    json p = json::object();
    switch (spec.family()) {
        case Family::Wiener: {
            const auto& q = spec.as<WienerParams>();
            p = {{"sigma2", q.sigma2}, {"mu", q.mu}};
            break;
        }
        case Family::SaS: {
            const auto& q = spec.as<SaSParams>();
            p = {{"alpha", q.alpha}, {"gamma", q.gamma}};
            break;
        }
        case Family::Gamma: {
            const auto& q = spec.as<GammaParams>();
            p = {{"theta", q.theta}, {"tau", q.tau}};
            break;
        }
        case Family::Laplace: p = {{"scale", spec.as<LaplaceParams>().scale}}; break;
        case Family::LayeredStable: {
            const auto& q = spec.as<LayeredStableParams>();
            p = {{"alpha0", q.alpha0}, {"alpha_inf", q.alpha_inf}, {"a0", q.a0}, {"a_inf", q.a_inf}};
            break;
        }
        case Family::TemperedStable: {
            const auto& q = spec.as<TemperedStableParams>();
            p = {{"alpha", q.alpha}, {"p", q.p}, {"lambda", q.lambda}, {"c", q.c}};
            break;
        }
    }
    return {{"family", family_name(spec.family())}, {"params", p}};
}

/// The built-in catalogue used by `verify all` and the hierarchy table.
inline std::vector<ProcessSpec> builtin_specs() {
    return {ProcessSpec::wiener(1.0, 0.0),          ProcessSpec::sas(0.5, 1.0),
            ProcessSpec::sas(1.0, 1.0),             ProcessSpec::sas(1.5, 1.0),
            ProcessSpec::sas(2.0, 0.5),             ProcessSpec::gamma_process(1.0, 1.0),
            ProcessSpec::laplace(1.0),              ProcessSpec::layered_stable(0.8, 1.6, 1.0, 1.0),
            ProcessSpec::tempered_stable(1.2, 1.0, 1.0, 1.0)};
}

}  // namespace levy
