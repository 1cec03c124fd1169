#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "samalm/sim.hpp"

namespace samalm::wm {

enum class NodeKind { Self, Robot, Human };
enum class Trend { Approaching, Receding, Static };

std::string_view to_string(Trend trend);

struct Node {
  NodeKind kind = NodeKind::Self;
  int id = 0;
  Vec2 p;
  Vec2 v;
  std::optional<Vec2> goal;  // self node only

  bool operator==(const Node&) const = default;
};

/// Self -> other relation at the current tick.
struct SpatialEdge {
  std::size_t to = 0;  // node index
  double distance = 0.0;
  Trend trend = Trend::Static;
  double closing_speed = 0.0;  // > 0 while the gap shrinks
};

/// Self node: distance to goal. Other nodes: speed change and one-step prediction.
struct TemporalEdge {
  std::size_t node = 0;
  double goal_distance = 0.0;
  double accel = 0.0;
  Vec2 p_next;
};

struct WorldModelGraph {
  std::vector<Node> nodes;  // nodes[0] is the self node
  std::vector<SpatialEdge> spatial_edges;
  std::vector<TemporalEdge> temporal_edges;
  double t = 0.0;
};

struct WorldModelParams {
  double dt = 0.25;
  double trend_epsilon = 0.05;  // m/s dead-band for Static
};

/// `prev` must be the same robot's observation from one tick earlier.
WorldModelGraph build_graph(const sim::LocalObservation& obs, const sim::LocalObservation* prev,
                            const WorldModelParams& params = {});

struct TextualWorldModel {
  std::string text;
  std::map<std::string, int> line_index;  // "self", "robot-<id>", "human-<id>" -> 0-based line
};

/// Canonical text: self line first, then robots by id, then humans by id; two decimals.
TextualWorldModel textualize(const WorldModelGraph& graph, const sim::RobotPersona& persona);

/// Fixed two-decimal rendering used by every prompt; never emits "-0.00".
std::string format_number(double value);
std::string format_vec(Vec2 v);

/// Fields recovered from a canonical text. Used by the scripted oracle.
struct ParsedEntity {
  NodeKind kind = NodeKind::Human;
  int id = 0;
  Vec2 p;
  Vec2 v;
  double distance = 0.0;
  Trend trend = Trend::Static;
  double accel = 0.0;
  Vec2 p_next;
};

struct ParsedWorldModel {
  Vec2 p;
  Vec2 v;
  Vec2 goal;
  double goal_distance = 0.0;
  double pref_speed = 0.0;
  double social_distance = 0.0;
  std::vector<ParsedEntity> entities;
};

/// Scans `text` for canonical lines, ignoring anything else. Returns nullopt
/// when no self line is present.
std::optional<ParsedWorldModel> parse_world_model(std::string_view text);

}  // namespace samalm::wm
