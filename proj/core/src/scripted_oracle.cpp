#include "samalm/scripted_oracle.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "samalm/prompt_format.hpp"
#include "samalm/random.hpp"

namespace samalm::llm {
namespace {

namespace pf = prompt_format;

constexpr int kHeadings = 24;
constexpr double kSpeedFractions[] = {1.0, 0.5, 0.25};
constexpr double kTieTolerance = 1e-9;

bool has_feedback(std::string_view user) { return user.find(pf::kFeedbackHeader) != std::string_view::npos; }

ScriptedEnvironment read_environment(std::string_view text) {
  ScriptedEnvironment env;
  if (auto v = find_prefixed_field(text, pf::kParametersPrefix, "dt")) env.dt = *v;
  if (auto v = find_prefixed_field(text, pf::kParametersPrefix, "human_radius")) env.human_radius = *v;
  if (auto v = find_prefixed_field(text, pf::kParametersPrefix, "robot_radius")) env.robot_radius = *v;
  return env;
}

sim::RobotPersona read_persona(std::string_view text, const wm::ParsedWorldModel& world) {
  sim::RobotPersona persona;
  persona.v_pref = world.pref_speed;
  persona.rho_pref = world.social_distance;
  if (auto v = find_prefixed_field(text, pf::kPersonaPrefix, "body_radius")) persona.radius = *v;
  return persona;
}

std::vector<std::string> describe(const wm::ParsedWorldModel& world, Vec2 action, std::size_t candidates,
                                  double penalty) {
  std::vector<std::string> steps;
  const Vec2 to_goal = world.goal - world.p;
  steps.push_back(fmt::format("goal is {} m away at bearing {:.0f} deg", wm::format_number(norm(to_goal)),
                              std::atan2(to_goal.y, to_goal.x) * 180.0 / std::numbers::pi));
  const wm::ParsedEntity* nearest = nullptr;
  for (const auto& e : world.entities) {
    if (nearest == nullptr || e.distance < nearest->distance) nearest = &e;
  }
  if (nearest != nullptr) {
    steps.push_back(fmt::format("nearest neighbour is {}-{} at {} m, {}",
                                nearest->kind == wm::NodeKind::Robot ? "robot" : "human", nearest->id,
                                wm::format_number(nearest->distance), wm::to_string(nearest->trend)));
  } else {
    steps.push_back("no pedestrians or robots in view");
  }
  steps.push_back(fmt::format("checked {} candidate commands against the social checklist; best penalty {}",
                              candidates, wm::format_number(penalty)));
  steps.push_back(fmt::format("command speed {} m/s", wm::format_number(norm(action))));
  return steps;
}

std::string run_actor(std::string_view persona_text, std::string_view world_text, std::string_view params_text,
                      PolicyIntent intent, Vec2* chosen = nullptr) {
  const auto world = wm::parse_world_model(world_text);
  if (!world) {
    if (chosen != nullptr) *chosen = {};
    return actor_response_json({"world model not found; holding position"}, {});
  }
  const sim::RobotPersona persona = read_persona(persona_text, *world);
  const ScriptedEnvironment env = read_environment(params_text);
  const auto scored = score_candidates(*world, persona, env);
  const Vec2 action = scripted_actor_policy(*world, persona, env, intent);
  double penalty = 0.0;
  for (const auto& c : scored) {
    if (c.action == action) penalty = c.penalty;
  }
  if (chosen != nullptr) *chosen = action;
  return actor_response_json(describe(*world, action, scored.size(), penalty), action);
}

class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(ScriptedOptions options) : options_(options) {}

  Completion complete(const Prompt& prompt) override {
    std::string text;
    switch (prompt.tag.kind) {
      case PromptKind::Actor: text = actor(prompt); break;
      case PromptKind::JointActor: text = joint_actor(prompt); break;
      case PromptKind::LocalCritic:
        text = critics::template_reasoning({false, prompt.tag.robot_id}, critics::parse_penalty_lines(prompt.user));
        break;
      case PromptKind::GlobalCritic:
        text = critics::template_reasoning({true, -1}, critics::parse_penalty_lines(prompt.user));
        break;
    }
    const int tokens = estimate_tokens(text);
    return {std::move(text), BackendMode::Scripted, 0.0, tokens, 0};
  }

  BackendMode mode() const override { return BackendMode::Scripted; }

 private:
  PolicyIntent intent_for(std::string_view system, std::string_view user, int nonce) const {
    switch (options_.fault) {
      case FaultMode::UnsafeUntilFeedback: return has_feedback(user) ? PolicyIntent::Safe : PolicyIntent::Unsafe;
      case FaultMode::Incorrigible: return PolicyIntent::Unsafe;
      case FaultMode::RandomUnsafe: {
        if (has_feedback(user)) return PolicyIntent::Safe;
        std::uint64_t h = fnv1a(user, fnv1a(system));
        h = mix_seed(h ^ mix_seed(options_.fault_seed) ^ static_cast<std::uint64_t>(nonce));
        return unit_interval(h) < options_.fault_probability ? PolicyIntent::Unsafe : PolicyIntent::Safe;
      }
      default: return PolicyIntent::Safe;
    }
  }

  std::string actor(const Prompt& prompt) const {
    if (options_.fault == FaultMode::Garbage) return "I would rather describe the scene in prose.";
    if (options_.fault == FaultMode::Idle) return actor_response_json({"holding position"}, {});
    return run_actor(prompt.system, prompt.user, prompt.system, intent_for(prompt.system, prompt.user, prompt.nonce));
  }

  std::string joint_actor(const Prompt& prompt) const {
    if (options_.fault == FaultMode::Garbage) return "No plan available.";
    nlohmann::json actions = nlohmann::json::array();
    std::vector<std::string> reasoning;
    std::string_view rest = prompt.user;
    auto pos = rest.find(pf::kRobotBlockPrefix);
    while (pos != std::string_view::npos) {
      rest.remove_prefix(pos + pf::kRobotBlockPrefix.size());
      const auto next = rest.find(pf::kRobotBlockPrefix);
      const std::string_view block = rest.substr(0, next);
      Vec2 a;
      if (options_.fault != FaultMode::Idle) {
        run_actor(block, block, prompt.system, intent_for(prompt.system, block, prompt.nonce), &a);
      }
      const int id = std::atoi(std::string(block.substr(0, block.find('\n'))).c_str());
      reasoning.push_back(fmt::format("robot-{}: speed {} m/s", id, wm::format_number(norm(a))));
      actions.push_back({std::stod(wm::format_number(a.x)), std::stod(wm::format_number(a.y))});
      pos = next;
    }
    return nlohmann::json{{"reasoning", reasoning}, {"actions", actions}}.dump();
  }

  ScriptedOptions options_;
};

}  // namespace

std::optional<double> find_prefixed_field(std::string_view text, std::string_view prefix, std::string_view key) {
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.starts_with(prefix)) continue;
    std::string needle = std::string(key) + "=";
    auto at = line.find(" " + needle);
    if (at == std::string_view::npos) continue;
    std::string_view value = line.substr(at + needle.size() + 1);
    value = value.substr(0, value.find(' '));
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec == std::errc{}) return out;
  }
  return std::nullopt;
}

std::vector<ScoredCandidate> score_candidates(const wm::ParsedWorldModel& world, const sim::RobotPersona& persona,
                                              const ScriptedEnvironment& env, const critics::CriticParams& base) {
  critics::CriticParams params = base;
  params.dt = env.dt;
  params.human_radius = env.human_radius + env.rounding_margin;

  sim::LocalObservation obs;
  obs.self.p = world.p;
  obs.self.v = world.v;
  obs.self.goal = world.goal;
  obs.self.persona = persona;
  for (const auto& e : world.entities) {
    (e.kind == wm::NodeKind::Human ? obs.humans : obs.robots).push_back({e.id, e.p, e.v});
  }

  const Vec2 to_goal = world.goal - world.p;
  const double goal_dist = norm(to_goal);
  const double goal_bearing = goal_dist > 0.0 ? std::atan2(to_goal.y, to_goal.x) : 0.0;
  const double current = norm_sq(world.v) > 0.0 ? std::atan2(world.v.y, world.v.x) : goal_bearing;

  auto evaluate = [&](Vec2 action, double heading, bool moving) {
    ScoredCandidate c;
    c.action = action;
    c.heading = heading;
    c.heading_change = moving ? std::abs(wrap_angle(heading - current)) : 0.0;
    const Vec2 next = world.p + action * env.dt;
    c.progress = goal_dist - distance(world.goal, next);
    c.penalty = params.score_base - critics::local_penalty(obs, action, persona, params).score;
    // Other robots may turn at any time: keep clear of everywhere they can reach in one step.
    const double keep_out = persona.radius + env.robot_radius + params.near_margin + env.robot_max_speed * env.dt;
    for (const auto& r : obs.robots) {
      const double intrusion = keep_out - distance(r.p, next);
      if (intrusion > 0.0) c.hazard += params.weights.robot_proximity + 100.0 * intrusion;
    }
    const double human_keep_out = persona.radius + env.human_radius + env.human_max_speed * env.dt;
    for (const auto& h : obs.humans) {
      const double intrusion = human_keep_out - distance(h.p, next);
      if (intrusion > 0.0) c.hazard += params.weights.near_collision + 100.0 * intrusion;
    }
    return c;
  };

  std::vector<ScoredCandidate> out;
  out.reserve(kHeadings * std::size(kSpeedFractions) + 1);
  for (int k = 0; k < kHeadings; ++k) {
    const double heading = goal_bearing + k * (2.0 * std::numbers::pi / kHeadings);
    for (double fraction : kSpeedFractions) {
      out.push_back(evaluate(from_polar(fraction * persona.v_pref, heading), heading, true));
    }
  }
  out.push_back(evaluate({}, current, false));
  return out;
}

Vec2 scripted_actor_policy(const wm::ParsedWorldModel& world, const sim::RobotPersona& persona,
                           const ScriptedEnvironment& env, PolicyIntent intent, const critics::CriticParams& params) {
  if (distance(world.goal, world.p) <= 0.0) return {};
  const auto candidates = score_candidates(world, persona, env, params);
  const ScoredCandidate* best = &candidates.front();
  for (const auto& c : candidates) {
    if (intent == PolicyIntent::Unsafe) {
      if (c.penalty > best->penalty + kTieTolerance) best = &c;
      continue;
    }
    const double diff = c.score() - best->score();
    if (diff > kTieTolerance || (std::abs(diff) <= kTieTolerance && c.heading_change < best->heading_change - kTieTolerance)) {
      best = &c;
    }
  }
  return best->action;
}

std::string actor_response_json(const std::vector<std::string>& reasoning, Vec2 action) {
  return fmt::format(R"({{"reasoning": {}, "action": [{}, {}]}})", nlohmann::json(reasoning).dump(),
                     wm::format_number(action.x), wm::format_number(action.y));
}

std::unique_ptr<Backend> make_scripted_backend(const ScriptedOptions& options) {
  return std::make_unique<ScriptedBackend>(options);
}

}  // namespace samalm::llm
