#pragma once

// Line-oriented scenario configuration:
//
//   # comment
//   scenario = dpt
//   dpt.rf_power = 32        # trailing comments are fine
//   thermal.temps = 0.535, 294.7, 400
//
// Every key has a built-in default, so `scenario = <name>` alone is a
// complete config. Unknown keys are rejected.

#include "sawsim/testbenches.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace sawsim {

enum class Scenario { characterize, dpt, buck, thermal, sweep };

std::string scenario_name(Scenario s);
/// Throws ErrorKind::config for an unknown name.
Scenario parse_scenario(std::string_view name);

struct ThermalConfig {
    std::vector<double> temps{0.535, 77.0, 294.7, 400.0, 473.0};
    std::vector<ThermalAnchor> anchors = default_thermal_anchors();
};

struct SweepConfig {
    Scenario base = Scenario::dpt;
    std::string param = "dpt.rf_power";
    std::vector<double> values{30, 31, 32, 33, 34, 35, 36};
};

struct ScenarioConfig {
    Scenario scenario = Scenario::dpt;

    // shared by every bench
    SawDeviceSpec saw;
    SourceIvModel source;
    engine::SolverConfig solver;
    PullDownSpec pulldown;  // `enabled` is per bench
    double diode_vf = 0.3;

    DptConfig dpt;
    BuckConfig buck;
    CharacterizationConfig characterize;
    ThermalConfig thermal;
    SweepConfig sweep;

    /// Bench configs with the shared blocks copied in.
    DptConfig resolved_dpt() const;
    BuckConfig resolved_buck() const;
    CharacterizationConfig resolved_characterize() const;

    void validate() const;
};

/// Parses and validates. Syntax errors carry the line number, invariant
/// errors the key path.
ScenarioConfig parse_config(std::string_view text);

/// Applies one `key = value` assignment (as given to --set).
void apply_setting(ScenarioConfig& cfg, std::string_view assignment);
void set_value(ScenarioConfig& cfg, const std::string& key, std::string_view value);

/// Every accepted key, in manifest order.
std::vector<std::string> config_keys();
bool is_numeric_key(const std::string& key);

/// Full config echo, one key per line at round-trip precision. Keys whose
/// default does not come from a bench measurement are marked `# assumed`.
std::string format_config(const ScenarioConfig& cfg);

}  // namespace sawsim
