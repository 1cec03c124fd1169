#include "samalm/actors.hpp"

#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "samalm/prompt_format.hpp"
#include "samalm/world_model.hpp"

namespace samalm::actors {
namespace {

namespace pf = prompt_format;

constexpr std::string_view kSchemaInstruction =
    "Respond with exactly one JSON object of the form "
    R"({"reasoning": ["step 1 ...", "step 2 ..."], "action": [vx, vy]})"
    " where vx and vy are the commanded velocity in m/s in the world frame. "
    "The speed sqrt(vx^2 + vy^2) must not exceed your preferred speed.";

constexpr std::string_view kReasoningInstruction =
    "Think step by step before answering: list numbered reasoning steps about your goal, the trend of every "
    "nearby pedestrian and robot, and their predicted next positions, then emit the JSON object.";

constexpr std::string_view kJointSchemaInstruction =
    "You plan for the whole team. Respond with exactly one JSON object of the form "
    R"({"reasoning": ["..."], "actions": [[vx0, vy0], [vx1, vy1], ...]})"
    " with one velocity per robot block, in the order the blocks are listed.";

// Matching closing brace for the object starting at `open`, skipping string contents.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

// First JSON object in `raw` that contains `key`.
std::optional<nlohmann::json> find_object_with(std::string_view raw, std::string_view key) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    const std::size_t close = match_brace(raw, open);
    if (close == std::string_view::npos) continue;
    const auto parsed = nlohmann::json::parse(raw.substr(open, close - open + 1), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) continue;
    if (parsed.contains(key)) return std::optional<nlohmann::json>(std::in_place, parsed);
  }
  return std::nullopt;
}

Vec2 read_pair(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
    throw ParseError("action must be an array of two numbers");
  }
  const Vec2 v{a[0].get<double>(), a[1].get<double>()};
  if (!is_finite(v)) throw ParseError("action components must be finite");
  return v;
}

}  // namespace

TaskConfigText TaskConfigText::standard(double dt, double human_radius, double robot_radius) {
  TaskConfigText t;
  t.text = fmt::format(
      "You are the controller of one robot in a team of heterogeneous robots crossing a plaza crowded with "
      "pedestrians. Each robot must reach its own goal without collisions while respecting the personal space of "
      "every pedestrian.\n"
      "Coordinates are meters in a shared world frame (x east, y north); velocities are m/s. Each decision "
      "commands a constant velocity held for {} s.\n"
      "Social rules: keep every pedestrian outside your social distance (your social distance plus both body "
      "radii); never come within collision distance plus 0.1 m of a pedestrian or another robot; avoid heading "
      "into groups of pedestrians; make steady progress to the goal.\n"
      "{} dt={} human_radius={} robot_radius={}\n"
      "Your world model lists one entity per line:\n"
      "  self: pos=(x,y) vel=(x,y) goal=(x,y) goal_dist=D pref_speed=S social_dist=P\n"
      "  robot-<id> / human-<id>: pos=(x,y) vel=(x,y) dist=D trend=<approaching|receding|static> accel=A "
      "next=(x,y)\n"
      "where dist is the current distance to you, trend the direction of its change, accel the change in speed "
      "and next the predicted position after one step.\n"
      "Action schema: {{\"reasoning\": [string, ...], \"action\": [vx, vy]}}",
      wm::format_number(dt), pf::kParametersPrefix,
      wm::format_number(dt), wm::format_number(human_radius), wm::format_number(robot_radius));
  return t;
}

PersonaPromptFragment persona_fragment(const sim::RobotPersona& persona) {
  std::string_view kind;
  switch (persona.kind) {
    case sim::RobotKind::MobileRobot: kind = "a wheeled mobile robot"; break;
    case sim::RobotKind::RobotDog: kind = "a legged robot dog"; break;
    case sim::RobotKind::Drone: kind = "a low-flying drone"; break;
  }
  return {fmt::format("You are {}. Your preferred speed is {} m/s and your socially acceptable distance is {} m.\n"
                      "{} kind={} pref_speed={} social_dist={} body_radius={}",
                      kind, wm::format_number(persona.v_pref), wm::format_number(persona.rho_pref),
                      prompt_format::kPersonaPrefix, sim::to_string(persona.kind), wm::format_number(persona.v_pref),
                      wm::format_number(persona.rho_pref), wm::format_number(persona.radius))};
}

void FeedbackBuffer::push(FeedbackEntry entry) {
  if (capacity_ == 0) return;
  while (entries_.size() >= capacity_) entries_.pop_front();
  entries_.push_back(std::move(entry));
}

std::string FeedbackBuffer::render() const {
  if (entries_.empty()) return {};
  std::string out = fmt::format("{}\n", prompt_format::kFeedbackHeader);
  for (const auto& e : entries_) {
    out += fmt::format("- attempt {}: local critic: {}", e.attempt, e.local_reason);
    if (!e.global_reason.empty()) out += fmt::format(" | global critic: {}", e.global_reason);
    out += '\n';
  }
  out += "Revise your action so that none of these issues repeat.\n";
  return out;
}

llm::Prompt build_actor_prompt(int robot_id, std::string_view world_text, const TaskConfigText& shared,
                               const PersonaPromptFragment& persona, const FeedbackBuffer& feedback, int attempt,
                               double t) {
  llm::Prompt p;
  p.tag = {llm::PromptKind::Actor, robot_id};
  p.nonce = attempt;
  p.system = fmt::format("{}\n\n{}\n\n{}\n{}", shared.text, persona.text, kSchemaInstruction, kReasoningInstruction);
  p.user = fmt::format("{} t={}\nWorld model:\n{}", prompt_format::kTimePrefix, wm::format_number(t), world_text);
  const std::string fb = feedback.render();
  if (!fb.empty()) p.user += "\n" + fb;
  return p;
}

Vec2 clamp_speed(Vec2 action, double v_pref) {
  const double speed = norm(action);
  if (speed <= v_pref) return action;
  return action * (v_pref / speed);
}

ActionProposal parse_action(std::string_view raw, const sim::RobotPersona& persona) {
  const auto obj = find_object_with(raw, "action");
  if (!obj) throw ParseError("no JSON object with an \"action\" field found");

  ActionProposal out;
  out.raw_text = std::string(raw);
  out.action = clamp_speed(read_pair(obj->at("action")), persona.v_pref);
  if (obj->contains("reasoning")) {
    const auto& r = obj->at("reasoning");
    if (r.is_array()) {
      for (const auto& step : r) out.reasoning.push_back(step.is_string() ? step.get<std::string>() : step.dump());
    } else if (r.is_string()) {
      out.reasoning.push_back(r.get<std::string>());
    }
  }
  return out;
}

ActionProposal propose(int robot_id, std::string_view world_text, const TaskConfigText& shared,
                       const sim::RobotPersona& persona, FeedbackBuffer& feedback, llm::Gateway& gateway,
                       int attempt, double t) {
  const PersonaPromptFragment fragment = persona_fragment(persona);
  const FeedbackBuffer no_feedback(feedback.capacity());
  std::string last_raw;
  for (int parse_try = 0; parse_try < 2; ++parse_try) {
    // Fresh proposals see only the world model; re-queries and parse retries see the buffer.
    const FeedbackBuffer& shown = (attempt > 0 || parse_try > 0) ? feedback : no_feedback;
    const llm::Prompt prompt = build_actor_prompt(robot_id, world_text, shared, fragment, shown, attempt, t);
    const llm::Completion completion = gateway.complete(prompt);
    last_raw = completion.text;
    try {
      ActionProposal p = parse_action(completion.text, persona);
      p.robot_id = robot_id;
      p.attempt = attempt;
      return p;
    } catch (const ParseError& e) {
      feedback.push({attempt, fmt::format("your reply could not be parsed ({}); answer with the JSON schema", e.what()),
                     ""});
    }
  }
  ActionProposal degraded;
  degraded.robot_id = robot_id;
  degraded.attempt = attempt;
  degraded.raw_text = last_raw;
  degraded.degraded = true;
  degraded.reasoning = {"degraded: two consecutive unparseable replies, holding position"};
  return degraded;
}

llm::Prompt build_joint_prompt(const std::vector<JointRobotInput>& robots, const TaskConfigText& shared, double t) {
  llm::Prompt p;
  p.tag = {llm::PromptKind::JointActor, -1};
  p.system = fmt::format("{}\n\n{}\n{}", shared.text, kJointSchemaInstruction, kReasoningInstruction);
  p.user = fmt::format("{} t={}\n", prompt_format::kTimePrefix, wm::format_number(t));
  for (const auto& r : robots) {
    p.user += fmt::format("{}{}\n{}\n{}", prompt_format::kRobotBlockPrefix, r.robot_id,
                          persona_fragment(r.persona).text, r.world_text);
  }
  return p;
}

std::vector<ActionProposal> parse_joint_actions(std::string_view raw, const std::vector<JointRobotInput>& robots) {
  std::vector<ActionProposal> out;
  const auto obj = find_object_with(raw, "actions");
  const nlohmann::json* actions = nullptr;
  if (obj && obj->at("actions").is_array() && obj->at("actions").size() == robots.size()) actions = &obj->at("actions");

  for (std::size_t i = 0; i < robots.size(); ++i) {
    ActionProposal p;
    p.robot_id = robots[i].robot_id;
    p.raw_text = std::string(raw);
    try {
      if (actions == nullptr) throw ParseError("joint reply lacks an actions array of the right length");
      p.action = clamp_speed(read_pair((*actions)[i]), robots[i].persona.v_pref);
    } catch (const ParseError&) {
      p.action = {};
      p.degraded = true;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace samalm::actors
