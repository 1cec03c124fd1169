#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "samalm/sim.hpp"

namespace samalm::sim {

/// Scenario file contents. `personas` empty means random assignment.
struct ScenarioConfig {
  double arena_side = 12.0;
  double dt = 0.25;
  double t_max = 40.0;
  double fov = 2.0 * std::numbers::pi;
  double max_range = 0.0;
  int n_humans = 5;
  int n_robots = 3;
  std::vector<RobotKind> personas;
  std::uint64_t seed = 0;
  OrcaParams orca;
  double robot_radius = 0.3;
  double human_radius = 0.3;
  double human_speed = 1.0;
  double nav_time = 25.0;

  SimParams sim_params() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const ScenarioConfig& c);
void from_json(const nlohmann::json& j, ScenarioConfig& c);

/// Circle-crossing layout: robots evenly spaced on a circle with goals on the
/// opposite side, humans placed and goaled uniformly at random without overlap.
SimState generate_scenario(const ScenarioConfig& config, std::uint64_t episode_seed);

/// One trajectory JSONL record.
nlohmann::json trajectory_record(const SimState& state, const std::vector<EpisodeEvent>& events);

nlohmann::json to_json(const EpisodeEvent& e);

}  // namespace samalm::sim
