// Check results and report serialization. Reports are pure functions of
// (scenario, config, seed): all reals print at 17 significant digits, keys
// are emitted in a fixed order, and nothing reads the clock or the
// environment, so identical runs produce byte-identical files.

#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace qcp {

struct CheckResult {
    std::string name;
    std::string op;  // "<=", ">=", "~="
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;  // only for "~="
    bool pass = false;
};

CheckResult check_le(const std::string& name, double value, double target);
CheckResult check_ge(const std::string& name, double value, double target);
CheckResult check_near(const std::string& name, double value, double target, double tolerance);

struct ScenarioReport {
    std::string scenario;
    std::uint64_t seed = 0;
    nlohmann::json config;
    std::vector<CheckResult> checks;

    bool all_pass() const;
};

// %.17g
std::string format_real(double x);

// RFC-4180-style: CRLF rows, header "name,op,value,target,tolerance,pass".
std::string report_to_csv(const ScenarioReport& report);

// Structured text: UTF-8 JSON with lexicographically ordered keys.
std::string report_to_text(const ScenarioReport& report);

} // namespace qcp
