#include "qcp/report.hpp"

#include <cstdio>
#include <sstream>

namespace qcp {

CheckResult check_le(const std::string& name, double value, double target) {
    return {name, "<=", value, target, 0.0, value <= target};
}

CheckResult check_ge(const std::string& name, double value, double target) {
    return {name, ">=", value, target, 0.0, value >= target};
}

CheckResult check_near(const std::string& name, double value, double target, double tolerance) {
    return {name, "~=", value, target, tolerance, std::abs(value - target) <= tolerance};
}

bool ScenarioReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string report_to_csv(const ScenarioReport& report) {
    std::ostringstream os;
    os << "name,op,value,target,tolerance,pass\r\n";
    for (const auto& c : report.checks) {
        os << c.name << "," << c.op << "," << format_real(c.value) << ","
           << format_real(c.target) << "," << format_real(c.tolerance) << ","
           << (c.pass ? "true" : "false") << "\r\n";
    }
    return os.str();
}

std::string report_to_text(const ScenarioReport& report) {
    nlohmann::json doc;
    doc["scenario"] = report.scenario;
    doc["seed"] = report.seed;
    doc["config"] = report.config;
    doc["all_pass"] = report.all_pass();
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) {
        nlohmann::json row;
        row["name"] = c.name;
        row["op"] = c.op;
        row["value"] = format_real(c.value);
        row["target"] = format_real(c.target);
        row["tolerance"] = format_real(c.tolerance);
        row["pass"] = c.pass;
        checks.push_back(row);
    }
    doc["checks"] = checks;
    return doc.dump(2) + "\n";
}

} // namespace qcp
