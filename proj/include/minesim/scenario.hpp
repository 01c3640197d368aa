// Scenario files: a named experiment (engine config + optional attack family
// + detection thresholds + replicate count) that serializes to JSON and runs
// to a reproducible report directory.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "minesim/detection.hpp"
#include "minesim/sim_engine.hpp"

namespace minesim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AttackFamily { Withholding, Selfish };

struct AttackSpec {
    AttackFamily family = AttackFamily::Withholding;
    double alpha = 0.0;
    double beta = 0.0;   // withholding only

    bool operator==(const AttackSpec&) const = default;
};

struct Scenario {
    std::string name;
    int replicates = 1;
    std::optional<std::string> output_dir;
    SimConfig sim;
    std::optional<AttackSpec> attack;  // when set and sim.miners is empty, miners are generated
    DetectionThresholds detection;

    bool operator==(const Scenario&) const = default;
};

Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json_text(const Scenario& s);

// The engine config a scenario actually runs: either sim verbatim, or sim
// with miners generated from the attack spec.
SimConfig effective_config(const Scenario& s);

// Where reports land: scenario.output_dir, else $MINESIM_OUTPUT_DIR/<name>,
// else ./out/<name>.
std::filesystem::path report_directory(const Scenario& s);

struct ScenarioReport {
    std::filesystem::path directory;
    std::vector<std::string> files_written;
};

// Runs all replicates (jobs threads), writes summary.json, replicates.csv,
// seed_manifest.json and, when events are recorded, events_r0.csv. Output
// bytes depend only on the scenario content, never on jobs or wall clock.
ScenarioReport run_scenario(const Scenario& s, int jobs);

// Re-run the exact scenario embedded in a seed manifest.
Scenario scenario_from_manifest(const std::string& path);

} // namespace minesim
