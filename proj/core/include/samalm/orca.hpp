#pragma once

#include <span>
#include <vector>

#include "samalm/geometry.hpp"
#include "samalm/random.hpp"

namespace samalm {

struct OrcaParams {
  double time_horizon = 2.0;
  double neighbor_dist = 10.0;
  double p_regoal = 0.01;
  double safety_margin = 0.03;  // added to every radius while planning, m
};

struct OrcaAgent {
  Vec2 p;
  Vec2 v;
  Vec2 pref_v;
  double radius = 0.3;
  double max_speed = 1.0;
};

/// Another disc seen by the agent. `responsibility` is the share of the
/// avoidance the agent takes on: 0.5 for reciprocal peers, 1.0 for discs
/// that will not yield.
struct OrcaNeighbor {
  Vec2 p;
  Vec2 v;
  double radius = 0.3;
  double responsibility = 0.5;
};

/// Half-plane boundary: permitted velocities lie left of `direction` through `point`.
struct OrcaLine {
  Vec2 point;
  Vec2 direction;
};

std::vector<OrcaLine> orca_constraints(const OrcaAgent& agent, std::span<const OrcaNeighbor> neighbors,
                                       double time_horizon, double dt);

/// New velocity for `agent` among `neighbors`, following van den Berg et al.'s
/// ORCA formulation including the 3D fallback when the 2D program is infeasible.
Vec2 orca_velocity(const OrcaAgent& agent, std::span<const OrcaNeighbor> neighbors, double time_horizon,
                   double dt);

}  // namespace samalm
