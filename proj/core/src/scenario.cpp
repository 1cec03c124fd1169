#include "samalm/scenario.hpp"

#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace samalm::sim {

SimParams ScenarioConfig::sim_params() const {
  return SimParams{dt, t_max, fov, max_range, arena_side, orca};
}

void ScenarioConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("scenario: dt_s must be positive");
  if (!(t_max > 0.0)) throw std::invalid_argument("scenario: t_max_s must be positive");
  if (!(fov > 0.0 && fov <= 2.0 * std::numbers::pi + 1e-12)) {
    throw std::invalid_argument("scenario: fov_rad must lie in (0, 2*pi]");
  }
  if (n_robots < 0) throw std::invalid_argument("scenario: n_robots must be >= 0");
  if (n_humans < 0) throw std::invalid_argument("scenario: n_humans must be >= 0");
  if (!personas.empty() && static_cast<int>(personas.size()) != n_robots) {
    throw std::invalid_argument("scenario: persona list length must equal n_robots");
  }
  if (!(robot_radius > 0.0 && human_radius > 0.0)) throw std::invalid_argument("scenario: radii must be positive");
  if (!(arena_side > 4.0 * (robot_radius + human_radius))) throw std::invalid_argument("scenario: arena too small");
}

void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  nlohmann::json personas = "random";
  if (!c.personas.empty()) {
    personas = nlohmann::json::array();
    for (RobotKind k : c.personas) personas.push_back(std::string(to_string(k)));
  }
  j = {
      {"arena_side_m", c.arena_side},
      {"dt_s", c.dt},
      {"t_max_s", c.t_max},
      {"fov_rad", c.fov},
      {"max_range_m", c.max_range},
      {"n_humans", c.n_humans},
      {"n_robots", c.n_robots},
      {"persona_assignment", personas},
      {"seed", c.seed},
      {"orca",
       {{"tau", c.orca.time_horizon},
        {"neighbor_dist", c.orca.neighbor_dist},
        {"p_regoal", c.orca.p_regoal},
        {"safety_margin", c.orca.safety_margin}}},
      {"radii", {{"robot", c.robot_radius}, {"human", c.human_radius}}},
      {"human_speed", c.human_speed},
      {"nav_time_s", c.nav_time},
  };
}

void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  c.arena_side = j.value("arena_side_m", c.arena_side);
  c.dt = j.value("dt_s", c.dt);
  c.t_max = j.value("t_max_s", c.t_max);
  c.fov = j.value("fov_rad", c.fov);
  c.max_range = j.value("max_range_m", c.max_range);
  c.n_humans = j.value("n_humans", c.n_humans);
  c.n_robots = j.value("n_robots", c.n_robots);
  c.seed = j.value("seed", c.seed);
  c.human_speed = j.value("human_speed", c.human_speed);
  c.nav_time = j.value("nav_time_s", c.nav_time);
  c.personas.clear();
  if (j.contains("persona_assignment")) {
    const auto& pa = j.at("persona_assignment");
    if (pa.is_string()) {
      if (pa.get<std::string>() != "random") {
        throw std::invalid_argument(fmt::format("scenario: unknown persona_assignment '{}'", pa.get<std::string>()));
      }
    } else {
      for (const auto& name : pa) c.personas.push_back(robot_kind_from_string(name.get<std::string>()));
    }
  }
  if (j.contains("orca")) {
    const auto& o = j.at("orca");
    c.orca.time_horizon = o.value("tau", c.orca.time_horizon);
    c.orca.neighbor_dist = o.value("neighbor_dist", c.orca.neighbor_dist);
    c.orca.p_regoal = o.value("p_regoal", c.orca.p_regoal);
    c.orca.safety_margin = o.value("safety_margin", c.orca.safety_margin);
  }
  if (j.contains("radii")) {
    const auto& r = j.at("radii");
    c.robot_radius = r.value("robot", c.robot_radius);
    c.human_radius = r.value("human", c.human_radius);
  }
}

SimState generate_scenario(const ScenarioConfig& config, std::uint64_t episode_seed) {
  config.validate();
  Rng rng(episode_seed);
  SimState state;
  state.rng_seed = episode_seed;

  const double half = 0.5 * config.arena_side;
  const double circle = half - 1.0;
  const double base_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < config.n_robots; ++i) {
    const RobotKind kind = config.personas.empty() ? static_cast<RobotKind>(rng.index(3))
                                                   : config.personas[static_cast<std::size_t>(i)];
    RobotState r;
    r.id = i;
    r.persona = RobotPersona::defaults(kind, config.robot_radius, config.nav_time);
    const double angle = base_angle + 2.0 * std::numbers::pi * i / config.n_robots;
    r.p = from_polar(circle, angle);
    r.goal = -r.p;
    r.heading = std::atan2(r.goal.y - r.p.y, r.goal.x - r.p.x);
    state.robots.push_back(r);
  }

  const double lo = -half + config.human_radius;
  const double hi = half - config.human_radius;
  constexpr double clearance = 0.5;
  for (int i = 0; i < config.n_humans; ++i) {
    HumanState h;
    h.id = i;
    h.radius = config.human_radius;
    h.v_pref = config.human_speed;
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      h.p = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
      placed = true;
      for (const HumanState& o : state.humans) {
        if (distance(h.p, o.p) < h.radius + o.radius + clearance) placed = false;
      }
      for (const RobotState& r : state.robots) {
        // Keep spawn points and goals of robots clear.
        const double min_d = h.radius + r.persona.radius + r.persona.rho_pref + clearance;
        if (distance(h.p, r.p) < min_d || distance(h.p, r.goal) < min_d) placed = false;
      }
    }
    if (!placed) throw std::runtime_error("scenario: could not place humans without overlap");
    h.goal = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
    state.humans.push_back(h);
  }
  return state;
}

nlohmann::json to_json(const EpisodeEvent& e) {
  nlohmann::json j = {{"kind", std::string(to_string(e.kind))}, {"t", e.t}};
  switch (e.kind) {
    case EventKind::Arrival: j["robot"] = e.first; break;
    case EventKind::RobotHumanCollision:
      j["robot"] = e.first;
      j["human"] = e.second;
      break;
    case EventKind::RobotRobotCollision: j["robots"] = {e.first, e.second}; break;
    case EventKind::Timeout: break;
  }
  return j;
}

nlohmann::json trajectory_record(const SimState& state, const std::vector<EpisodeEvent>& events) {
  nlohmann::json robots = nlohmann::json::array();
  for (const RobotState& r : state.robots) {
    robots.push_back({{"id", r.id},
                      {"p", {r.p.x, r.p.y}},
                      {"v", {r.v.x, r.v.y}},
                      {"status", std::string(to_string(r.status))}});
  }
  nlohmann::json humans = nlohmann::json::array();
  for (const HumanState& h : state.humans) {
    humans.push_back({{"id", h.id}, {"p", {h.p.x, h.p.y}}, {"v", {h.v.x, h.v.y}}});
  }
  nlohmann::json ev = nlohmann::json::array();
  for (const EpisodeEvent& e : events) ev.push_back(to_json(e));
  return {{"step", state.step_index}, {"t", state.t}, {"robots", robots}, {"humans", humans}, {"events", ev}};
}

}  // namespace samalm::sim
