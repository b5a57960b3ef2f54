#pragma once

#include <string>
#include <vector>

#include "goanet/sim.hpp"

namespace goanet::scenario {

// Parses and validates a scenario configuration (JSON). The schema is strict:
// unknown keys are rejected and every violation names the offending key path.
// Power-style quantities are in W, Hz, seconds and bits; dBm values are
// accepted only through explicit *_dbm keys.
sim::Scenario from_json_text(const std::string& text);
sim::Scenario load_file(const std::string& path);

// Canonical JSON echo; re-parsing yields an identical logical scenario.
std::string to_json_text(const sim::Scenario& scenario);

// Parses one sweep dimension spec of the form "name=v1,v2,..." where name is
// one of d_avg, g_avg, gamma, v. Specs combine into a Cartesian grid.
std::vector<sim::SweepPoint> parse_sweep_grid(
    const std::vector<std::string>& dimension_specs);

}  // namespace goanet::scenario
