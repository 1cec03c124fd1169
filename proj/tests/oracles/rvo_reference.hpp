#pragma once

#include <vector>

#include "samalm/geometry.hpp"

namespace samalm::oracle {

struct RefAgent {
  Vec2 p;
  Vec2 v;
  Vec2 goal;
  double radius = 0.3;
  double max_speed = 1.0;
};

/// Sampling-based reciprocal velocity obstacle step: every candidate velocity
/// on a polar grid is scored by deviation from the preferred velocity plus an
/// inverse time-to-collision term computed with reciprocal relative velocity.
Vec2 rvo_reference_velocity(const RefAgent& self, const std::vector<RefAgent>& others, double dt);

/// Advances all agents together for `steps` ticks and returns positions per tick.
std::vector<std::vector<Vec2>> simulate_reference(std::vector<RefAgent> agents, double dt, int steps);

/// Earliest t >= 0 at which discs separated by `rel_p` moving with `rel_v` touch; infinity if never.
double time_to_collision(Vec2 rel_p, Vec2 rel_v, double combined_radius);

}  // namespace samalm::oracle
