#pragma once

#include <deque>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "samalm/gateway.hpp"
#include "samalm/sim.hpp"

namespace samalm::actors {

/// Shared task description, identical for every actor.
struct TaskConfigText {
  std::string text;

  /// Objective, coordinate convention, social rules, world-model grammar and action schema.
  static TaskConfigText standard(double dt, double human_radius, double robot_radius);
};

/// Persona-specific prompt fragment carrying speed preference and social distance.
struct PersonaPromptFragment {
  std::string text;
};

PersonaPromptFragment persona_fragment(const sim::RobotPersona& persona);

struct FeedbackEntry {
  int attempt = 0;
  std::string local_reason;
  std::string global_reason;
};

/// Critic reasoning handed back to an actor. FIFO with fixed capacity.
class FeedbackBuffer {
 public:
  explicit FeedbackBuffer(std::size_t capacity = 3) : capacity_(capacity) {}

  void push(FeedbackEntry entry);
  void clear() { entries_.clear(); }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<FeedbackEntry>& entries() const { return entries_; }

  /// Feedback section for the user prompt; empty when there are no entries.
  std::string render() const;

 private:
  std::size_t capacity_;
  std::deque<FeedbackEntry> entries_;
};

struct ActionProposal {
  int robot_id = 0;
  Vec2 action;
  std::vector<std::string> reasoning;
  int attempt = 0;
  std::string raw_text;
  bool degraded = false;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// system = shared task + persona + schema + step-by-step instruction;
/// user = time line + world model + feedback section (omitted when empty).
llm::Prompt build_actor_prompt(int robot_id, std::string_view world_text, const TaskConfigText& shared,
                               const PersonaPromptFragment& persona, const FeedbackBuffer& feedback, int attempt,
                               double t);

/// First well-formed {"reasoning": [...], "action": [vx, vy]} object in `raw`.
/// Actions faster than v_pref are rescaled onto the v_pref circle.
ActionProposal parse_action(std::string_view raw, const sim::RobotPersona& persona);

/// Prompt, query, parse. A parse failure is retried once with the error in the
/// feedback buffer; a second failure yields a degraded zero-velocity proposal.
/// Gateway hard errors propagate.
ActionProposal propose(int robot_id, std::string_view world_text, const TaskConfigText& shared,
                       const sim::RobotPersona& persona, FeedbackBuffer& feedback, llm::Gateway& gateway,
                       int attempt, double t);

/// Centralized baseline: one prompt over every robot's world model, one joint action array back.
struct JointRobotInput {
  int robot_id = 0;
  sim::RobotPersona persona;
  std::string world_text;
};

llm::Prompt build_joint_prompt(const std::vector<JointRobotInput>& robots, const TaskConfigText& shared, double t);

/// Parses {"actions": [[vx, vy], ...]}; falls back to zero velocity per robot on failure.
std::vector<ActionProposal> parse_joint_actions(std::string_view raw, const std::vector<JointRobotInput>& robots);

/// Rescales `action` onto the v_pref circle when it is faster.
Vec2 clamp_speed(Vec2 action, double v_pref);

}  // namespace samalm::actors
