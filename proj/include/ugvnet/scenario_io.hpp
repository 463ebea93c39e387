#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ugvnet/sim.hpp"

namespace ugvnet {

// Schema or semantic violation in a scenario file; `field` names the
// offending entry (e.g. "scenario.obstacles[2].radius_m").
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& field_in, const std::string& what_in)
        : std::runtime_error(field_in + ": " + what_in), field(field_in) {}
    std::string field;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& sc);

// Loads and validates; throws ConfigError on schema problems and
// std::runtime_error on I/O failure.
ScenarioConfig load_scenario_file(const std::string& path);

// Bundled scenarios: "point_nominal", "circle_nominal", "eight_nominal".
const std::vector<std::string>& builtin_scenario_names();
ScenarioConfig builtin_scenario(const std::string& name);

// Resolve either a bundled name or a file path.
ScenarioConfig resolve_scenario(const std::string& name_or_path);

}  // namespace ugvnet
