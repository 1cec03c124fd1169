#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "samalm/actors.hpp"
#include "samalm/critics.hpp"
#include "samalm/fusion.hpp"
#include "samalm/gateway.hpp"

namespace samalm::fusion {

/// Everything one robot contributes to a verification round.
struct RobotContext {
  int robot_id = 0;
  sim::LocalObservation obs;
  std::string world_text;
  sim::RobotPersona persona;
  actors::FeedbackBuffer feedback;
};

/// What each robot forwards along the message chain.
struct TeamPacket {
  int robot_id = 0;
  sim::LocalObservation obs;
  Vec2 action;
  double local_score = 0.0;
};

struct ChainDelivery {
  std::vector<TeamPacket> packets;  // in chain order, leader first
  int hops = 0;
};

/// Forwards packets hop by hop from the chain tail to the leader.
ChainDelivery aggregate_to_leader(const ChainTopology& chain, const std::vector<TeamPacket>& packets);

struct RoundConfig {
  FusionParams fusion;
  critics::CriticParams critic;
  actors::TaskConfigText task;
  bool llm_critics = true;  // ask the gateway for critic reasoning
  bool concurrent = false;  // issue re-queries in parallel
};

struct RoundLog {
  int step = 0;
  int attempt = 0;
  std::vector<int> robot_ids;
  std::vector<double> q;
  double q_global = 0.0;
  FusionResult fusion;
  std::vector<int> targets;  // robot ids
  bool forced = false;
  int chain_hops = 0;
};

nlohmann::json to_json(const RoundLog& log);

struct RoundOutcome {
  std::vector<actors::ActionProposal> accepted;  // one per context, same order
  std::vector<RoundLog> logs;
  std::vector<critics::CriticVerdict> local_verdicts;  // of the accepted joint action
  critics::CriticVerdict global_verdict;
  int requeries = 0;
  bool forced = false;
  double z = 0.0;
};

/// Verifies the joint proposal, re-querying robots whose local score falls
/// below the fused score until the threshold is met or max_requery
/// re-queries have run. In the latter case the best-scoring joint action
/// seen is returned and flagged forced.
RoundOutcome verification_round(int step, double t, std::vector<RobotContext>& robots,
                                std::vector<actors::ActionProposal> proposals, const ChainTopology& chain,
                                const RoundConfig& config, llm::Gateway& gateway);

}  // namespace samalm::fusion
