#include "samalm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace samalm::sim {

std::string_view to_string(RobotKind kind) {
  switch (kind) {
    case RobotKind::MobileRobot: return "mobile_robot";
    case RobotKind::RobotDog: return "robot_dog";
    case RobotKind::Drone: return "drone";
  }
  return "unknown";
}

RobotKind robot_kind_from_string(std::string_view name) {
  if (name == "mobile_robot" || name == "MobileRobot") return RobotKind::MobileRobot;
  if (name == "robot_dog" || name == "RobotDog") return RobotKind::RobotDog;
  if (name == "drone" || name == "Drone") return RobotKind::Drone;
  throw std::invalid_argument(fmt::format("unknown robot kind '{}'", name));
}

RobotPersona RobotPersona::defaults(RobotKind kind, double radius, double nav_time) {
  switch (kind) {
    case RobotKind::MobileRobot: return {kind, 1.25, 0.45, radius, nav_time};
    case RobotKind::RobotDog: return {kind, 1.0, 0.3, radius, nav_time};
    case RobotKind::Drone: return {kind, 1.5, 0.85, radius, nav_time};
  }
  return {};
}

std::string_view to_string(RobotStatus status) {
  switch (status) {
    case RobotStatus::Active: return "active";
    case RobotStatus::Arrived: return "arrived";
    case RobotStatus::Collided: return "collided";
  }
  return "unknown";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Arrival: return "arrival";
    case EventKind::RobotHumanCollision: return "robot_human_collision";
    case EventKind::RobotRobotCollision: return "robot_robot_collision";
    case EventKind::Timeout: return "timeout";
  }
  return "unknown";
}

std::vector<int> SimState::active_robot_ids() const {
  std::vector<int> ids;
  for (const RobotState& r : robots) {
    if (r.active()) ids.push_back(r.id);
  }
  return ids;
}

bool SimState::any_active() const {
  return std::any_of(robots.begin(), robots.end(), [](const RobotState& r) { return r.active(); });
}

const RobotState& robot_by_id(const SimState& state, int id) {
  for (const RobotState& r : state.robots) {
    if (r.id == id) return r;
  }
  throw ContractViolation(fmt::format("no robot with id {}", id));
}

StepResult step(const SimState& state, std::span<const Vec2> joint_actions,
                std::span<const Vec2> human_velocities, const SimParams& params) {
  const std::vector<int> active = state.active_robot_ids();
  if (joint_actions.size() != active.size()) {
    throw ContractViolation(
        fmt::format("step: {} actions for {} active robots", joint_actions.size(), active.size()));
  }
  if (human_velocities.size() != state.humans.size()) {
    throw ContractViolation(
        fmt::format("step: {} human velocities for {} humans", human_velocities.size(), state.humans.size()));
  }

  StepResult out{state, {}};
  SimState& next = out.state;

  std::size_t action_index = 0;
  for (RobotState& robot : next.robots) {
    if (!robot.active()) {
      robot.v = {};
      continue;
    }
    const Vec2 cmd = joint_actions[action_index++];
    if (!is_finite(cmd)) throw ContractViolation(fmt::format("step: non-finite action for robot {}", robot.id));
    if (norm(cmd) > robot.persona.v_pref + 1e-9) {
      throw ContractViolation(fmt::format("step: action for robot {} exceeds v_pref {:.2f}", robot.id,
                                          robot.persona.v_pref));
    }
    robot.p = robot.p + cmd * params.dt;
    robot.v = cmd;
    if (norm_sq(cmd) > 0.0) robot.heading = std::atan2(cmd.y, cmd.x);
  }

  for (std::size_t i = 0; i < next.humans.size(); ++i) {
    const Vec2 v = human_velocities[i];
    if (!is_finite(v)) throw ContractViolation("step: non-finite human velocity");
    next.humans[i].p = next.humans[i].p + v * params.dt;
    next.humans[i].v = v;
  }

  next.step_index = state.step_index + 1;
  next.t = next.step_index * params.dt;

  out.events = detect_events(next, params);
  for (const EpisodeEvent& e : out.events) {
    if (e.kind == EventKind::Timeout) continue;
    for (RobotState& robot : next.robots) {
      if (robot.id != e.first || !robot.active()) continue;
      robot.status = e.kind == EventKind::Arrival ? RobotStatus::Arrived : RobotStatus::Collided;
      robot.v = {};
    }
    if (e.kind == EventKind::RobotRobotCollision) {
      for (RobotState& robot : next.robots) {
        if (robot.id == e.second && robot.active()) {
          robot.status = RobotStatus::Collided;
          robot.v = {};
        }
      }
    }
  }
  return out;
}

bool in_field_of_view(Vec2 origin, double heading, Vec2 target, double fov, double max_range) {
  const Vec2 rel = target - origin;
  if (max_range > 0.0 && norm(rel) > max_range) return false;
  if (fov >= 2.0 * std::numbers::pi) return true;
  if (norm_sq(rel) == 0.0) return true;
  const double bearing = std::abs(wrap_angle(std::atan2(rel.y, rel.x) - heading));
  return bearing <= 0.5 * fov + 1e-12;
}

LocalObservation observe(const SimState& state, int robot_id, const SimParams& params) {
  const RobotState& self = robot_by_id(state, robot_id);
  LocalObservation obs;
  obs.observer_id = robot_id;
  obs.self = self;
  obs.t = state.t;
  for (const RobotState& other : state.robots) {
    if (other.id == robot_id) continue;
    if (in_field_of_view(self.p, self.heading, other.p, params.fov, params.max_range)) {
      obs.robots.push_back({other.id, other.p, other.v});
    }
  }
  for (const HumanState& h : state.humans) {
    if (in_field_of_view(self.p, self.heading, h.p, params.fov, params.max_range)) {
      obs.humans.push_back({h.id, h.p, h.v});
    }
  }
  return obs;
}

std::vector<EpisodeEvent> detect_events(const SimState& state, const SimParams& params) {
  std::vector<EpisodeEvent> events;
  std::vector<bool> terminal(state.robots.size(), false);

  for (std::size_t i = 0; i < state.robots.size(); ++i) {
    const RobotState& r = state.robots[i];
    if (!r.active()) continue;
    for (const HumanState& h : state.humans) {
      if (distance(r.p, h.p) < r.persona.radius + h.radius) {
        events.push_back({EventKind::RobotHumanCollision, r.id, h.id, state.t});
        terminal[i] = true;
        break;
      }
    }
  }

  for (std::size_t i = 0; i < state.robots.size(); ++i) {
    for (std::size_t j = i + 1; j < state.robots.size(); ++j) {
      const RobotState& a = state.robots[i];
      const RobotState& b = state.robots[j];
      const bool a_new = a.active() && !terminal[i];
      const bool b_new = b.active() && !terminal[j];
      if (!a_new && !b_new) continue;
      if (distance(a.p, b.p) >= a.persona.radius + b.persona.radius) continue;
      events.push_back({EventKind::RobotRobotCollision, a_new ? a.id : b.id, a_new ? b.id : a.id, state.t});
      if (a.active()) terminal[i] = true;
      if (b.active()) terminal[j] = true;
    }
  }

  for (std::size_t i = 0; i < state.robots.size(); ++i) {
    const RobotState& r = state.robots[i];
    if (r.active() && !terminal[i] && distance(r.p, r.goal) < r.persona.radius) {
      events.push_back({EventKind::Arrival, r.id, -1, state.t});
      terminal[i] = true;
    }
  }

  const bool unresolved = [&] {
    for (std::size_t i = 0; i < state.robots.size(); ++i) {
      if (state.robots[i].active() && !terminal[i]) return true;
    }
    return false;
  }();
  if (unresolved && state.t >= params.t_max - 1e-12) events.push_back({EventKind::Timeout, -1, -1, state.t});
  return events;
}

std::vector<Vec2> human_policy_step(SimState& state, Rng& rng, const SimParams& params) {
  const double half = 0.5 * params.arena_side;
  for (HumanState& h : state.humans) {
    const bool regoal = rng.uniform() < params.orca.p_regoal;
    if (regoal || distance(h.p, h.goal) < h.radius) {
      h.goal = {rng.uniform(-half + h.radius, half - h.radius), rng.uniform(-half + h.radius, half - h.radius)};
    }
  }

  std::vector<Vec2> velocities;
  velocities.reserve(state.humans.size());
  const double range_sq = params.orca.neighbor_dist * params.orca.neighbor_dist;
  const double margin = params.orca.safety_margin;

  std::vector<std::pair<double, OrcaNeighbor>> candidates;
  std::vector<OrcaNeighbor> neighbors;
  for (std::size_t i = 0; i < state.humans.size(); ++i) {
    const HumanState& h = state.humans[i];
    candidates.clear();
    for (std::size_t j = 0; j < state.humans.size(); ++j) {
      if (j == i) continue;
      const HumanState& o = state.humans[j];
      const double d2 = norm_sq(o.p - h.p);
      if (d2 < range_sq) candidates.push_back({d2, {o.p, o.v, o.radius + margin, 0.5}});
    }
    for (const RobotState& r : state.robots) {
      const double d2 = norm_sq(r.p - h.p);
      if (d2 < range_sq) candidates.push_back({d2, {r.p, r.v, r.persona.radius + margin, 1.0}});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    neighbors.clear();
    for (const auto& c : candidates) neighbors.push_back(c.second);

    const Vec2 to_goal = h.goal - h.p;
    const double goal_dist = norm(to_goal);
    const double pref_speed = std::min(h.v_pref, goal_dist / params.dt);
    const OrcaAgent agent{h.p, h.v, normalized(to_goal) * pref_speed, h.radius + margin, h.v_pref};
    velocities.push_back(orca_velocity(agent, neighbors, params.orca.time_horizon, params.dt));
  }
  return velocities;
}

int count_human_overlaps(const SimState& state) {
  int count = 0;
  for (std::size_t i = 0; i < state.humans.size(); ++i) {
    for (std::size_t j = i + 1; j < state.humans.size(); ++j) {
      if (distance(state.humans[i].p, state.humans[j].p) < state.humans[i].radius + state.humans[j].radius) ++count;
    }
  }
  return count;
}

}  // namespace samalm::sim
