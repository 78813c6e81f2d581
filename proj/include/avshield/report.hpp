#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace avshield {

// Rounds to `digits` significant decimal digits (printf %g round trip), the
// precision every reported float carries.
double round_sig(double v, int digits = 6);

struct EvalRecord {
    std::string item;
    std::string portrait_id;
    std::string audio_id;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> metrics; // insertion-ordered
    std::map<std::string, std::vector<double>> traces;
    std::map<std::string, std::string> artifacts; // logical name -> relative path

    void put(const std::string& name, double value) { metrics.emplace_back(name, round_sig(value)); }
};

struct EvalReport {
    std::string tool_version;
    std::string run_id;
    std::string mode;
    std::string config_digest;
    std::uint64_t master_seed = 0;
    std::vector<EvalRecord> records;

    // mean/median per metric over finite record values; computed from the
    // rounded records so aggregates are exactly recomputable from the file
    std::map<std::string, std::pair<double, double>> aggregates() const;
};

// Stable key order, 6-significant-digit floats, non-finite values encoded as
// strings ("inf", "-inf", "nan"). created_at is the only field expected to
// differ between identical runs.
nlohmann::ordered_json report_to_json(const EvalReport& report, bool with_timestamp = true);
void emit_report(const EvalReport& report, const std::string& path);

std::string fnv_digest(const std::string& bytes);

} // namespace avshield
