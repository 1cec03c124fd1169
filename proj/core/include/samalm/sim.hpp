#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "samalm/geometry.hpp"
#include "samalm/orca.hpp"
#include "samalm/random.hpp"

namespace samalm::sim {

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class RobotKind { MobileRobot, RobotDog, Drone };

std::string_view to_string(RobotKind kind);
RobotKind robot_kind_from_string(std::string_view name);

struct RobotPersona {
  RobotKind kind = RobotKind::MobileRobot;
  double v_pref = 1.25;    // m/s
  double rho_pref = 0.45;  // socially acceptable distance, m
  double radius = 0.3;     // body radius, m
  double nav_time = 25.0;  // average navigation time t_m, s

  static RobotPersona defaults(RobotKind kind, double radius = 0.3, double nav_time = 25.0);
};

enum class RobotStatus { Active, Arrived, Collided };
std::string_view to_string(RobotStatus status);

struct RobotState {
  int id = 0;
  RobotPersona persona;
  Vec2 p;
  Vec2 v;
  Vec2 goal;
  double heading = 0.0;
  RobotStatus status = RobotStatus::Active;

  bool active() const { return status == RobotStatus::Active; }
};

/// Goal and speed preference are simulator-internal; they never reach an observation.
struct HumanState {
  int id = 0;
  Vec2 p;
  Vec2 v;
  Vec2 goal;
  double radius = 0.3;
  double v_pref = 1.0;
};

struct SimState {
  double t = 0.0;
  int step_index = 0;
  std::vector<RobotState> robots;
  std::vector<HumanState> humans;
  std::uint64_t rng_seed = 0;

  std::vector<int> active_robot_ids() const;
  bool any_active() const;
};

struct SimParams {
  double dt = 0.25;
  double t_max = 40.0;
  double fov = 2.0 * std::numbers::pi;
  double max_range = 0.0;  // 0 disables the range limit
  double arena_side = 12.0;
  OrcaParams orca;
};

/// What an observer sees of another entity.
struct ObservedEntity {
  int id = 0;
  Vec2 p;
  Vec2 v;
};

struct LocalObservation {
  int observer_id = 0;
  RobotState self;
  std::vector<ObservedEntity> humans;
  std::vector<ObservedEntity> robots;
  double t = 0.0;
};

enum class EventKind { Arrival, RobotHumanCollision, RobotRobotCollision, Timeout };
std::string_view to_string(EventKind kind);

struct EpisodeEvent {
  EventKind kind = EventKind::Timeout;
  int first = -1;   // robot id
  int second = -1;  // human id or second robot id
  double t = 0.0;

  bool operator==(const EpisodeEvent&) const = default;
};

struct StepResult {
  SimState state;
  std::vector<EpisodeEvent> events;
};

/// Advances the world by one tick. `joint_actions` holds one command per
/// active robot in ascending id order; `human_velocities` one per human.
StepResult step(const SimState& state, std::span<const Vec2> joint_actions,
                std::span<const Vec2> human_velocities, const SimParams& params);

/// FOV predicate: true when `target` lies within fov/2 of `heading` seen from `origin`.
bool in_field_of_view(Vec2 origin, double heading, Vec2 target, double fov, double max_range = 0.0);

LocalObservation observe(const SimState& state, int robot_id, const SimParams& params);

/// Events implied by `state` for robots that are still active. Collision wins over arrival.
std::vector<EpisodeEvent> detect_events(const SimState& state, const SimParams& params);

/// ORCA velocities for every human. Resamples goals in place (random regoal or arrival).
std::vector<Vec2> human_policy_step(SimState& state, Rng& rng, const SimParams& params);

/// Number of human pairs closer than the sum of their radii.
int count_human_overlaps(const SimState& state);

const RobotState& robot_by_id(const SimState& state, int id);

}  // namespace samalm::sim
