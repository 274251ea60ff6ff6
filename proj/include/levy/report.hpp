#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "spec_json.hpp"

namespace levy {

inline constexpr const char* kReportSchemaVersion = "1.0.0";

/// How a metric is judged against its target.
enum class Comparison {
    AbsDiff,     ///< |value - target| <= tolerance
    RelDiff,     ///< |value - target| <= tolerance·|target|
    AtMost,      ///< value <= target + tolerance
    AtLeast,     ///< value >= target - tolerance
    Below,       ///< value < target (tolerance unused, kept for the record)
};

inline const char* comparison_name(Comparison c) {
    switch (c) {
        case Comparison::AbsDiff: return "abs_diff";
        case Comparison::RelDiff: return "rel_diff";
        case Comparison::AtMost: return "at_most";
        case Comparison::AtLeast: return "at_least";
        case Comparison::Below: return "below";
    }
    return "?";
}

inline Comparison comparison_from_name(const std::string& s) {
    for (auto c : {Comparison::AbsDiff, Comparison::RelDiff, Comparison::AtMost, Comparison::AtLeast, Comparison::Below})
        if (s == comparison_name(c)) return c;
    throw SpecError("unknown comparison '" + s + "'");
}

struct Metric {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    std::string tolerance_key;  ///< name accepted by --tolerance KEY=VAL
    Comparison comparison = Comparison::AbsDiff;
};

/// The verdict of one metric: a function of the stored numbers only.
inline bool metric_passes(const Metric& m) {
    if (std::isnan(m.value)) return false;
    switch (m.comparison) {
        case Comparison::AbsDiff: return std::abs(m.value - m.target) <= m.tolerance;
        case Comparison::RelDiff: return std::abs(m.value - m.target) <= m.tolerance * std::abs(m.target);
        case Comparison::AtMost: return m.value <= m.target + m.tolerance;
        case Comparison::AtLeast: return m.value >= m.target - m.tolerance;
        case Comparison::Below: return m.value < m.target;
    }
    return false;
}

/// Tolerance overrides keyed by tolerance_key.
class Tolerances {
public:
    void set(const std::string& key, double v) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw SpecError("tolerance '" + key + "' must be a finite value >= 0");
        values_[key] = v;
    }
    double get(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, double>& values() const { return values_; }

    /// Parses "KEY=VAL".
    void parse(const std::string& kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw SpecError("tolerance override must look like KEY=VAL: " + kv);
        double v;
        try {
            std::size_t used = 0;
            v = std::stod(kv.substr(eq + 1), &used);
            if (used != kv.size() - eq - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw SpecError("tolerance value is not a number: " + kv);
        }
        set(kv.substr(0, eq), v);
    }

private:
    std::map<std::string, double> values_;
};

enum class ReportStatus { Pass, Fail, Skipped };

inline const char* status_name(ReportStatus s) {
    switch (s) {
        case ReportStatus::Pass: return "pass";
        case ReportStatus::Fail: return "fail";
        case ReportStatus::Skipped: return "skipped";
    }
    return "?";
}

struct ExperimentReport {
    std::string experiment_id;
    std::vector<std::string> spec_ids;
    std::vector<Metric> metrics;
    std::string skip_reason;
    bool skipped = false;
    json provenance = json::object();
    json tables = json::object();  ///< auxiliary per-point data
    double runtime_seconds = 0.0;

    /// Values are stored at output precision so persisted reports judge identically.
    Metric& add(std::string name, double value, double target, double tolerance, std::string key, Comparison c) {
        metrics.push_back({std::move(name), round12(value), round12(target), round12(tolerance), std::move(key), c});
        return metrics.back();
    }

    ReportStatus status() const {
        if (skipped) return ReportStatus::Skipped;
        for (const auto& m : metrics)
            if (!metric_passes(m)) return ReportStatus::Fail;
        return ReportStatus::Pass;
    }

    std::vector<std::string> failing_metrics() const {
        std::vector<std::string> out;
        for (const auto& m : metrics)
            if (!metric_passes(m)) out.push_back(m.name);
        return out;
    }
};

inline ExperimentReport skipped_report(std::string id, std::vector<std::string> spec_ids, std::string reason) {
    ExperimentReport r;
    r.experiment_id = std::move(id);
    r.spec_ids = std::move(spec_ids);
    r.skipped = true;
    r.skip_reason = std::move(reason);
    return r;
}

struct ReportOptions {
    bool deterministic = false;  ///< omit timestamp and wall-clock runtime
};

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json report_to_json(const ExperimentReport& r, const ReportOptions& opt = {}) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["experiment_id"] = r.experiment_id;
    j["spec_ids"] = r.spec_ids;
    j["status"] = status_name(r.status());
    if (r.skipped) j["skip_reason"] = r.skip_reason;
    json ms = json::array();
    for (const auto& m : r.metrics) {
        ms.push_back({{"name", m.name},
                      {"value", num12(m.value)},
                      {"target", num12(m.target)},
                      {"tolerance", num12(m.tolerance)},
                      {"tolerance_key", m.tolerance_key},
                      {"comparison", comparison_name(m.comparison)},
                      {"pass", metric_passes(m)}});
    }
    j["metrics"] = ms;
    j["provenance"] = r.provenance;
    if (!r.tables.empty()) j["tables"] = r.tables;
    if (!opt.deterministic) {
        j["runtime_seconds"] = num12(r.runtime_seconds);
        j["timestamp"] = utc_timestamp();
    }
    return j;
}

/// Reads a persisted report; verdicts are recomputed from the stored metrics.
inline ExperimentReport report_from_json(const json& j) {
    ExperimentReport r;
    r.experiment_id = j.at("experiment_id").get<std::string>();
    r.spec_ids = j.at("spec_ids").get<std::vector<std::string>>();
    if (j.contains("skip_reason")) {
        r.skipped = true;
        r.skip_reason = j.at("skip_reason").get<std::string>();
    }
    for (const auto& m : j.at("metrics")) {
        r.metrics.push_back({m.at("name").get<std::string>(), from_num(m.at("value")), from_num(m.at("target")),
                             from_num(m.at("tolerance")), m.at("tolerance_key").get<std::string>(),
                             comparison_from_name(m.at("comparison").get<std::string>())});
    }
    if (j.contains("provenance")) r.provenance = j.at("provenance");
    if (j.contains("tables")) r.tables = j.at("tables");
    if (j.contains("runtime_seconds")) r.runtime_seconds = from_num(j.at("runtime_seconds"));
    return r;
}

/// Doubles rounded to 12 significant digits inside a JSON array.
inline json num12_array(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num12(x));
    return a;
}

}  // namespace levy
