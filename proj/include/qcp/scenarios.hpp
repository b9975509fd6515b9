// Registry of the library's worked experiments: every scenario builds a fully
// configured quantum process with its s-sets, tree, and measurement model
// declared up front (before any sampling), runs its named checks, and emits a
// deterministic report.

#pragma once

#include "qcp/born.hpp"
#include "qcp/compat.hpp"
#include "qcp/cournot.hpp"
#include "qcp/report.hpp"
#include "qcp/squant.hpp"
#include "qcp/tree.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qcp {

struct BuiltScenario {
    QuantumProcess process;
    std::vector<double> time_grid;
    // Declared before any sampling runs; keys are stable labels.
    std::map<std::string, SSet> ssets;
    std::optional<TreeStructure> tree;
    std::optional<MeasurementModel> model;
    nlohmann::json config;  // resolved configuration the build used
};

struct Scenario {
    std::string name;
    std::string description;
    nlohmann::json default_config;
    std::function<BuiltScenario(const nlohmann::json& config)> build;
    std::function<std::vector<CheckResult>(BuiltScenario&, const nlohmann::json& config,
                                           std::uint64_t seed)> checks;
    // Present when the scenario's checks sample a trajectory ensemble; used
    // by the CLI ensemble export. Deterministic in (config, seed).
    std::function<TrajectoryEnsemble(BuiltScenario&, const nlohmann::json& config,
                                     std::uint64_t seed)> ensemble;
};

const std::vector<Scenario>& scenario_registry();

// Throws unknown-scenario.
const Scenario& find_scenario(const std::string& name);

// Applies dotted-path overrides ("a.b=3") onto the defaults. Values parse as
// JSON scalars when possible, else strings. Throws on unknown keys.
nlohmann::json merge_config(const nlohmann::json& defaults,
                            const std::map<std::string, std::string>& overrides);

// Build, check, and assemble the report. Overrides of the form
// "require.<check name>" replace that check's target (handy for forcing a
// controlled failure); other overrides go through merge_config.
ScenarioReport run_scenario(const std::string& name,
                            const std::map<std::string, std::string>& overrides,
                            std::uint64_t seed);

} // namespace qcp
