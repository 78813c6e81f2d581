#include "avshield/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include "avshield/error.hpp"
#include "avshield/rng.hpp"
#include "avshield/version.hpp"

namespace avshield {

double round_sig(double v, int digits) {
    if (!std::isfinite(v)) return v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return std::strtod(buf, nullptr);
}

std::string fnv_digest(const std::string& bytes) {
    const std::uint64_t h = Rng::fnv1a(bytes);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

nlohmann::ordered_json encode_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

nlohmann::ordered_json encode_trace(const std::vector<double>& t) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (double v : t) arr.push_back(encode_value(round_sig(v)));
    return arr;
}

} // namespace

std::map<std::string, std::pair<double, double>> EvalReport::aggregates() const {
    std::map<std::string, std::vector<double>> values;
    for (const auto& r : records)
        for (const auto& [name, v] : r.metrics)
            if (std::isfinite(v)) values[name].push_back(v);
    std::map<std::string, std::pair<double, double>> out;
    for (auto& [name, vals] : values) {
        if (vals.empty()) continue;
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        std::sort(vals.begin(), vals.end());
        const std::size_t n = vals.size();
        const double median = n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
        out[name] = {round_sig(mean), round_sig(median)};
    }
    return out;
}

nlohmann::ordered_json report_to_json(const EvalReport& report, bool with_timestamp) {
    nlohmann::ordered_json j;
    j["tool_version"] = report.tool_version.empty() ? kVersion : report.tool_version;
    j["run_id"] = report.run_id;
    j["mode"] = report.mode;
    j["config_digest"] = report.config_digest;
    j["seed"] = report.master_seed;
    if (with_timestamp) {
        char buf[32];
        const std::time_t now = std::time(nullptr);
        std::tm tm_utc;
        gmtime_r(&now, &tm_utc);
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        j["created_at"] = buf;
    }
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto& r : report.records) {
        nlohmann::ordered_json rec;
        rec["item"] = r.item;
        rec["portrait_id"] = r.portrait_id;
        rec["audio_id"] = r.audio_id;
        rec["seed"] = r.seed;
        nlohmann::ordered_json metrics;
        for (const auto& [name, v] : r.metrics) metrics[name] = encode_value(v);
        rec["metrics"] = std::move(metrics);
        if (!r.traces.empty()) {
            nlohmann::ordered_json traces;
            for (const auto& [name, t] : r.traces) traces[name] = encode_trace(t);
            rec["traces"] = std::move(traces);
        }
        if (!r.artifacts.empty()) {
            nlohmann::ordered_json art;
            for (const auto& [name, p] : r.artifacts) art[name] = p;
            rec["artifacts"] = std::move(art);
        }
        records.push_back(std::move(rec));
    }
    j["records"] = std::move(records);
    nlohmann::ordered_json agg;
    for (const auto& [name, mm] : report.aggregates())
        agg[name] = {{"mean", encode_value(mm.first)}, {"median", encode_value(mm.second)}};
    j["aggregates"] = std::move(agg);
    return j;
}

void emit_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << report_to_json(report).dump(1) << "\n";
}

} // namespace avshield
