#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "samalm/critics.hpp"
#include "samalm/gateway.hpp"
#include "samalm/world_model.hpp"

namespace samalm::llm {

/// Scene constants the oracle reads from the shared task description.
struct ScriptedEnvironment {
  double dt = 0.25;
  double human_radius = 0.3;
  double robot_radius = 0.3;
  double robot_max_speed = 1.5;  // fastest persona
  double human_max_speed = 1.0;
  double rounding_margin = 0.02;  // slack for 2-decimal coordinates in the prompt, m
};

enum class PolicyIntent { Safe, Unsafe };

struct ScoredCandidate {
  Vec2 action;
  double heading = 0.0;         // absolute heading of the candidate, rad
  double heading_change = 0.0;  // |heading - current heading|, 0 for the zero candidate
  double progress = 0.0;        // m gained toward the goal
  double penalty = 0.0;         // points, mirror of the local critic
  double hazard = 0.0;          // points, worst-case proximity to other robots
  double score() const { return progress - penalty - hazard; }
};

/// 24 headings (15 degree steps starting at the goal bearing) times speed
/// fractions {1, 0.5, 0.25} of v_pref, followed by the zero command.
std::vector<ScoredCandidate> score_candidates(const wm::ParsedWorldModel& world, const sim::RobotPersona& persona,
                                              const ScriptedEnvironment& env, const critics::CriticParams& params = {});

/// Safe: argmax of progress minus penalty, ties to the smaller heading change.
/// Unsafe: argmax of the critic penalty, ties to candidate order.
Vec2 scripted_actor_policy(const wm::ParsedWorldModel& world, const sim::RobotPersona& persona,
                           const ScriptedEnvironment& env, PolicyIntent intent = PolicyIntent::Safe,
                           const critics::CriticParams& params = {});

/// Renders {"reasoning": [...], "action": [vx, vy]} with two-decimal components.
std::string actor_response_json(const std::vector<std::string>& reasoning, Vec2 action);

/// Value of `key=` on the first line starting with `prefix`, if any.
std::optional<double> find_prefixed_field(std::string_view text, std::string_view prefix, std::string_view key);

std::unique_ptr<Backend> make_scripted_backend(const ScriptedOptions& options);

}  // namespace samalm::llm
