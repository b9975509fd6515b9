// Command-line front end: list scenarios, run one with config overrides and a
// seed, or sweep a parameter and collect the assertion values. All randomness
// flows from --seed; reports are byte-identical across runs of the same argv.

#include "qcp/compat.hpp"
#include "qcp/report.hpp"
#include "qcp/scenarios.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& sets) {
    std::map<std::string, std::string> overrides;
    for (const auto& entry : sets) {
        auto eq = entry.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("--set expects key=value, got '" + entry + "'");
        overrides[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    return overrides;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

struct OutputOptions {
    std::string directory = ".";
    std::vector<std::string> formats;  // subset of {csv, text}; empty = both

    bool wants(const std::string& format) const {
        if (formats.empty()) return true;
        for (const auto& f : formats)
            if (f == format || (format == "text" && f == "structured-text")) return true;
        return false;
    }
};

void emit_report(const qcp::ScenarioReport& report, const OutputOptions& out) {
    std::filesystem::create_directories(out.directory);
    std::filesystem::path base(out.directory);
    if (out.wants("csv"))
        write_file(base / (report.scenario + "_report.csv"), qcp::report_to_csv(report));
    if (out.wants("text"))
        write_file(base / (report.scenario + "_report.txt"), qcp::report_to_text(report));
    for (const auto& check : report.checks)
        std::cout << (check.pass ? "[pass] " : "[FAIL] ") << check.name << " = "
                  << qcp::format_real(check.value) << " (" << check.op << " "
                  << qcp::format_real(check.target) << ")\n";
    std::cout << (report.all_pass() ? "all checks passed" : "CHECKS FAILED") << "\n";
}

int cmd_list(const std::string& format) {
    if (format == "csv") {
        std::cout << "name,description\r\n";
        for (const auto& s : qcp::scenario_registry())
            std::cout << s.name << ",\"" << s.description << "\"\r\n";
    } else {
        for (const auto& s : qcp::scenario_registry())
            std::cout << s.name << " - " << s.description << "\n";
    }
    return 0;
}

int cmd_run(const std::string& name, const std::vector<std::string>& sets,
            std::uint64_t seed, long long count, bool export_ensemble,
            const OutputOptions& out) {
    auto overrides = parse_overrides(sets);
    if (count >= 0) overrides["count"] = std::to_string(count);
    qcp::ScenarioReport report = qcp::run_scenario(name, overrides, seed);
    emit_report(report, out);

    if (export_ensemble) {
        const qcp::Scenario& scenario = qcp::find_scenario(name);
        if (!scenario.ensemble)
            throw std::invalid_argument("scenario '" + name + "' samples no ensemble");
        std::map<std::string, std::string> config_only;
        for (const auto& [k, v] : overrides)
            if (k.rfind("require.", 0) != 0) config_only[k] = v;
        nlohmann::json config = qcp::merge_config(scenario.default_config, config_only);
        qcp::BuiltScenario built = scenario.build(config);
        auto ensemble = scenario.ensemble(built, config, seed);
        write_file(std::filesystem::path(out.directory) / (name + "_ensemble.csv"),
                   qcp::ensemble_to_csv(ensemble));
    }
    return report.all_pass() ? 0 : 1;
}

int cmd_sweep(const std::string& name, const std::string& parameter,
              const std::string& values, const std::vector<std::string>& sets,
              std::uint64_t seed, const OutputOptions& out) {
    const qcp::Scenario& scenario = qcp::find_scenario(name);
    {
        // Validate the parameter path against the scenario's defaults.
        std::map<std::string, std::string> probe{{parameter, "0"}};
        try {
            qcp::merge_config(scenario.default_config, probe);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("unknown parameter: '" + parameter + "'");
        }
    }

    std::vector<std::string> value_list;
    std::stringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ',')) value_list.push_back(item);
    if (value_list.empty()) throw std::invalid_argument("--values is empty");

    std::ostringstream csv;
    bool header_done = false;
    for (const auto& value : value_list) {
        auto overrides = parse_overrides(sets);
        overrides[parameter] = value;
        qcp::ScenarioReport report = qcp::run_scenario(name, overrides, seed);
        if (!header_done) {
            csv << parameter;
            for (const auto& check : report.checks) csv << "," << check.name;
            csv << ",all_pass\r\n";
            header_done = true;
        }
        csv << value;
        for (const auto& check : report.checks) csv << "," << qcp::format_real(check.value);
        csv << "," << (report.all_pass() ? "true" : "false") << "\r\n";
    }

    std::filesystem::create_directories(out.directory);
    std::filesystem::path path =
        std::filesystem::path(out.directory) / (name + "_sweep_" + parameter + ".csv");
    write_file(path, csv.str());
    std::cout << "sweep written to " << path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-process scenario runner"};
    app.require_subcommand(1);

    std::string list_format = "text";
    auto* list = app.add_subcommand("list", "list registered scenarios");
    list->add_option("--format", list_format, "text or csv")
        ->check(CLI::IsMember({"text", "csv"}));

    std::string run_name;
    std::vector<std::string> run_sets;
    std::vector<std::string> run_formats;
    std::string run_out = ".";
    std::uint64_t run_seed = 0;
    long long run_count = -1;
    bool run_export_ensemble = false;
    auto* run = app.add_subcommand("run", "run one scenario and write its report");
    run->add_option("scenario", run_name, "scenario name")->required();
    run->add_option("--seed", run_seed, "random seed (required)")->required();
    run->add_option("--set", run_sets, "config override key=value (repeatable, dotted paths)");
    run->add_option("--out", run_out, "output directory");
    run->add_option("--format", run_formats, "csv and/or text (default: both)")
        ->check(CLI::IsMember({"csv", "text", "structured-text"}));
    run->add_option("--count", run_count, "ensemble trajectory count override");
    run->add_flag("--export-ensemble", run_export_ensemble,
                  "also write the sampled ensemble as CSV");

    std::string sweep_name, sweep_param, sweep_values, sweep_out = ".";
    std::vector<std::string> sweep_sets;
    std::uint64_t sweep_seed = 0;
    auto* sweep = app.add_subcommand("sweep", "run a scenario across parameter values");
    sweep->add_option("scenario", sweep_name, "scenario name")->required();
    sweep->add_option("--param", sweep_param, "config key to sweep")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep->add_option("--set", sweep_sets, "additional fixed overrides");
    sweep->add_option("--seed", sweep_seed, "random seed (required)")->required();
    sweep->add_option("--out", sweep_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list->parsed()) return cmd_list(list_format);
        if (run->parsed()) {
            OutputOptions out{run_out, run_formats};
            return cmd_run(run_name, run_sets, run_seed, run_count, run_export_ensemble, out);
        }
        OutputOptions out{sweep_out, {}};
        return cmd_sweep(sweep_name, sweep_param, sweep_values, sweep_sets, sweep_seed, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
