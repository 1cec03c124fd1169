#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "samalm/geometry.hpp"
#include "samalm/sim.hpp"

namespace samalm::fusion {

struct FusionParams {
  double kappa = 1.0;
  double z_th = 80.0;
  double eps_clamp = 1.0;
  int max_requery = 3;

  void validate() const;
};

void to_json(nlohmann::json& j, const FusionParams& p);
void from_json(const nlohmann::json& j, FusionParams& p);

struct FusionResult {
  std::vector<double> confidence;  // C, sums to 1
  double entropy = 0.0;            // H, nats, scaled by kappa
  double omega = 1.0;              // weight on the mean local score
  double z = 0.0;                  // fused score
  std::vector<std::size_t> requery_targets;  // indices into the score list
};

/// Scores clamped to [eps, 100] and normalized. Clamping affects weighting only.
std::vector<double> confidence(std::span<const double> local_scores, const FusionParams& params);

/// Entropy-weighted blend of the mean local score and the global score.
FusionResult fuse(std::span<const double> local_scores, double global_score, const FusionParams& params);

/// Indices whose score is strictly below `z`.
std::vector<std::size_t> select_requery_targets(std::span<const double> local_scores, double z);

struct ChainMember {
  int robot_id = 0;
  Vec2 p;
};

/// Nearest-neighbour message chain; order[0] is the leader.
struct ChainTopology {
  std::vector<int> order;
  int leader = -1;
};

/// Greedy chain from the lowest robot id, always extending to the nearest
/// unvisited robot, ties to the lower id.
ChainTopology build_chain(std::span<const ChainMember> members);

}  // namespace samalm::fusion
