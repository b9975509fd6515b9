#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcp/scenarios.hpp"
#include "qcp/report.hpp"

#include <cmath>

using namespace qcp;

TEST_CASE("registry lists the expected scenarios") {
    std::vector<std::string> names;
    for (const auto& s : scenario_registry()) names.push_back(s.name);
    for (const char* expected :
         {"einstein_boxes", "beam_splitter", "mach_zehnder", "three_arm_hwp", "stern_gerlach",
          "epr", "retrodiction_lab", "test_particle_disturbance"})
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());
    CHECK_THROWS_WITH_AS(find_scenario("bogus"), doctest::Contains("unknown-scenario"),
                         std::invalid_argument);
}

TEST_CASE("builders are pure: same config, identical amplitudes") {
    for (const auto& s : scenario_registry()) {
        if (s.name == "einstein_boxes") continue;  // covered below at reduced cost
        BuiltScenario a = s.build(s.default_config);
        BuiltScenario b = s.build(s.default_config);
        CHECK(amplitude_hash(a.process.initial_state()) ==
              amplitude_hash(b.process.initial_state()));
        CHECK(amplitude_hash(a.process.snapshot(a.time_grid.back())) ==
              amplitude_hash(b.process.snapshot(b.time_grid.back())));
    }
    const Scenario& boxes = find_scenario("einstein_boxes");
    BuiltScenario a = boxes.build(boxes.default_config);
    BuiltScenario b = boxes.build(boxes.default_config);
    CHECK(amplitude_hash(a.process.initial_state()) ==
          amplitude_hash(b.process.initial_state()));
}

TEST_CASE("every scenario passes at defaults") {
    for (const auto& s : scenario_registry()) {
        std::map<std::string, std::string> overrides;
        if (s.name == "einstein_boxes") overrides["count"] = "20000";
        ScenarioReport report = run_scenario(s.name, overrides, 7);
        INFO(s.name);
        CHECK(report.all_pass());
        CHECK(report.checks.size() >= 2);
    }
}

TEST_CASE("mach-zehnder variants") {
    SUBCASE("closed shutter") {
        auto report = run_scenario("mach_zehnder", {{"shutter", "closed"}}, 7);
        CHECK(report.all_pass());
        for (const auto& c : report.checks) {
            if (c.name == "d1_weight") CHECK(c.target == 0.25);
            if (c.name == "absorbed_weight") CHECK(c.target == 0.5);
        }
    }

    SUBCASE("randomized shutter carries the four-branch tree") {
        auto report = run_scenario("mach_zehnder", {{"shutter", "randomized"}}, 7);
        CHECK(report.all_pass());
        const Scenario& s = find_scenario("mach_zehnder");
        auto config = merge_config(s.default_config, {{"shutter", "randomized"}});
        BuiltScenario built = s.build(config);
        REQUIRE(built.tree.has_value());
        CHECK(built.tree->branch_count() == 4);
        bool found_dark = false;
        for (const auto& c : report.checks)
            if (c.name == "open_and_d1_weight") {
                found_dark = true;
                CHECK(c.value <= 1e-10);
            }
        CHECK(found_dark);
    }

    SUBCASE("phase plate traces the interference fringe") {
        for (double phase : {0.0, 3.14159265358979312 / 2, 3.14159265358979312}) {
            auto report = run_scenario(
                "mach_zehnder", {{"hwp_phase", format_real(phase)}}, 7);
            CHECK(report.all_pass());
            double expected = std::sin(phase / 2) * std::sin(phase / 2);
            for (const auto& c : report.checks)
                if (c.name == "d1_weight") CHECK(std::abs(c.value - expected) <= 1e-10);
        }
    }

    SUBCASE("bad shutter value is a config error") {
        CHECK_THROWS(run_scenario("mach_zehnder", {{"shutter", "ajar"}}, 7));
    }
}

TEST_CASE("test particle variants") {
    auto on = run_scenario("test_particle_disturbance", {}, 7);
    CHECK(on.all_pass());
    auto off = run_scenario("test_particle_disturbance", {{"coupling", "off"}}, 7);
    CHECK(off.all_pass());
    for (const auto& c : off.checks)
        if (c.name == "d1_weight") CHECK(c.value <= 1e-10);
}

TEST_CASE("stern-gerlach with a noisy pointer still yields a valid POVM") {
    auto report = run_scenario("stern_gerlach", {{"eta", "0.1"}}, 7);
    CHECK(report.all_pass());
}

TEST_CASE("reports are deterministic and config overrides are validated") {
    auto a = run_scenario("beam_splitter", {}, 7);
    auto b = run_scenario("beam_splitter", {}, 7);
    CHECK(report_to_csv(a) == report_to_csv(b));
    CHECK(report_to_text(a) == report_to_text(b));

    CHECK_THROWS_WITH_AS(run_scenario("mach_zehnder", {{"no_such_key", "1"}}, 7),
                         doctest::Contains("unknown parameter"), std::invalid_argument);

    // require.* overrides re-aim a check's target; an impossible target must
    // flip the scenario to failing.
    auto forced = run_scenario("beam_splitter", {{"require.arm_to_detector_overlap", "2.0"}}, 7);
    CHECK_FALSE(forced.all_pass());
}

TEST_CASE("einstein boxes honors config overrides") {
    // A lower wall leaks: sweeping the barrier height must show the crossing
    // frequency and overlap structure degrade.
    auto low = run_scenario("einstein_boxes",
                            {{"barrier_height", "0.05"}, {"count", "5000"}}, 7);
    bool some_failure = false;
    for (const auto& c : low.checks) some_failure |= !c.pass;
    CHECK(some_failure);
}

TEST_CASE("declared s-sets sit on the scenario grid") {
    for (const auto& s : scenario_registry()) {
        nlohmann::json config = s.default_config;
        if (s.name == "einstein_boxes") config["count"] = 1000;
        BuiltScenario built = s.build(config);
        for (const auto& [label, sset] : built.ssets) {
            bool on_grid = false;
            for (double t : built.time_grid)
                on_grid |= std::abs(t - sset.time) <= 1e-12;
            INFO(s.name, ":", label);
            CHECK(on_grid);
        }
        if (built.tree) CHECK(validate_tree(*built.tree).empty());
    }
}
