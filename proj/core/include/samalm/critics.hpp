#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "samalm/sim.hpp"

namespace samalm::critics {

struct PenaltyWeights {
  double social_zone = 5.0;
  double near_collision = 10.0;
  double high_risk = 5.0;
  double robot_proximity = 10.0;
  double overtime = 1.25;
  double group_crowding = 15.0;
};

struct CriticParams {
  int n_th = 3;           // crowd threshold
  int k = 2;              // lookahead steps
  double t_soft = 30.0;   // overtime trigger, s
  double score_base = 100.0;
  double near_margin = 0.1;
  double human_radius = 0.3;
  double dt = 0.25;
  PenaltyWeights weights;

  void validate() const;
};

void to_json(nlohmann::json& j, const CriticParams& p);
void from_json(const nlohmann::json& j, CriticParams& p);

enum class Branch { SocialZone, NearCollision, HighRiskArea, RobotProximity, Overtime, GroupCrowding };
std::string_view to_string(Branch branch);
Branch branch_from_string(std::string_view s);

struct PenaltyItem {
  Branch branch = Branch::SocialZone;
  double magnitude = 0.0;             // points deducted, >= 0
  std::vector<std::string> subjects;  // "human-3", "robot-1", ...
  std::string detail;

  bool operator==(const PenaltyItem&) const = default;
};

struct CriticScope {
  bool global = false;
  int robot_id = -1;

  bool operator==(const CriticScope&) const = default;
};

/// score = score_base - sum of penalty magnitudes.
struct CriticVerdict {
  CriticScope scope;
  double score = 100.0;
  std::vector<PenaltyItem> penalties;
  std::string reasoning;
};

nlohmann::json to_json(const CriticVerdict& v);

/// Number of observed humans inside the robot's social distance after
/// `steps` ticks of constant velocity (robot at `action`, humans as observed).
int crowd_count(const sim::LocalObservation& obs, Vec2 action, const sim::RobotPersona& persona,
                const CriticParams& params, int steps);

/// Short-term social-zone / near-collision check (most severe branch per
/// human) on the one-step rollout, plus the long-term high-risk-area check.
CriticVerdict local_penalty(const sim::LocalObservation& obs, Vec2 action, const sim::RobotPersona& persona,
                            const CriticParams& params);

/// Team-level check over all active robots: pairwise proximity on the one-step
/// rollout, overtime against the mean persona navigation time, and group crowding.
CriticVerdict global_penalty(std::span<const sim::LocalObservation> observations, std::span<const Vec2> actions,
                             double t, const CriticParams& params);

/// Reasoning text built only from branch, subjects and magnitude.
std::string template_reasoning(const CriticScope& scope, std::span<const PenaltyItem> items);

/// Itemized penalty lines embedded in critic prompts, e.g.
/// "- branch=near_collision magnitude=10.00 subjects=human-7".
std::string render_penalty_lines(std::span<const PenaltyItem> items);
std::vector<PenaltyItem> parse_penalty_lines(std::string_view text);

}  // namespace samalm::critics
