#include "samalm/orchestrator.hpp"

#include <fmt/format.h>
#include <future>
#include <iterator>
#include <limits>
#include <unordered_map>

#include "samalm/critic_llm.hpp"
#include "samalm/world_model.hpp"

namespace samalm::fusion {
namespace {

struct Evaluation {
  std::vector<critics::CriticVerdict> locals;
  critics::CriticVerdict global;
  FusionResult fusion;
  int hops = 0;
};

std::string team_context(const ChainDelivery& delivery, double t) {
  std::string out = fmt::format("Team data gathered at the leader over {} hops, t={} s:\n", delivery.hops,
                                wm::format_number(t));
  for (const auto& p : delivery.packets) {
    out += fmt::format("robot-{}: pos={} goal={} action={} pref_speed={} local_score={} humans_in_view={}\n",
                       p.robot_id, wm::format_vec(p.obs.self.p), wm::format_vec(p.obs.self.goal),
                       wm::format_vec(p.action), wm::format_number(p.obs.self.persona.v_pref),
                       wm::format_number(p.local_score), p.obs.humans.size());
  }
  return out;
}

Evaluation evaluate(double t, const std::vector<RobotContext>& robots,
                    const std::vector<actors::ActionProposal>& proposals, const ChainTopology& chain,
                    const RoundConfig& config, llm::Gateway& gateway, int attempt) {
  Evaluation ev;
  llm::Gateway* critic_gateway = config.llm_critics ? &gateway : nullptr;
  std::vector<TeamPacket> packets;
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const RobotContext& r = robots[i];
    const critics::CriticVerdict det = critics::local_penalty(r.obs, proposals[i].action, r.persona, config.critic);
    const std::string context = fmt::format("{}Proposed action: {}", r.world_text, wm::format_vec(proposals[i].action));
    ev.locals.push_back(critics::critique_with_llm(det, context, critics::local_checklist(), critic_gateway, attempt));
    packets.push_back({r.robot_id, r.obs, proposals[i].action, det.score});
  }

  const ChainDelivery delivery = aggregate_to_leader(chain, packets);
  ev.hops = delivery.hops;
  std::vector<sim::LocalObservation> team_obs;
  std::vector<Vec2> team_actions;
  for (const auto& p : delivery.packets) {
    team_obs.push_back(p.obs);
    team_actions.push_back(p.action);
  }
  const critics::CriticVerdict det = critics::global_penalty(team_obs, team_actions, t, config.critic);
  ev.global =
      critics::critique_with_llm(det, team_context(delivery, t), critics::global_checklist(), critic_gateway, attempt);

  std::vector<double> q;
  for (const auto& v : ev.locals) q.push_back(v.score);
  ev.fusion = fuse(q, ev.global.score, config.fusion);
  return ev;
}

}  // namespace

ChainDelivery aggregate_to_leader(const ChainTopology& chain, const std::vector<TeamPacket>& packets) {
  std::unordered_map<int, const TeamPacket*> by_id;
  for (const auto& p : packets) by_id[p.robot_id] = &p;

  ChainDelivery delivery;
  std::vector<TeamPacket> carried;
  for (auto it = chain.order.rbegin(); it != chain.order.rend(); ++it) {
    const auto found = by_id.find(*it);
    if (found == by_id.end()) throw sim::ContractViolation(fmt::format("no team packet from robot-{}", *it));
    carried.push_back(*found->second);
    if (std::next(it) != chain.order.rend()) ++delivery.hops;
  }
  delivery.packets.assign(carried.rbegin(), carried.rend());
  return delivery;
}

nlohmann::json to_json(const RoundLog& log) {
  return {{"step", log.step},           {"attempt", log.attempt},
          {"robots", log.robot_ids},    {"Q", log.q},
          {"Q_global", log.q_global},   {"C", log.fusion.confidence},
          {"H", log.fusion.entropy},    {"omega", log.fusion.omega},
          {"Z", log.fusion.z},          {"targets", log.targets},
          {"forced", log.forced},       {"chain_hops", log.chain_hops}};
}

RoundOutcome verification_round(int step, double t, std::vector<RobotContext>& robots,
                                std::vector<actors::ActionProposal> proposals, const ChainTopology& chain,
                                const RoundConfig& config, llm::Gateway& gateway) {
  if (proposals.size() != robots.size()) {
    throw sim::ContractViolation("verification_round: one proposal per active robot required");
  }

  RoundOutcome out;
  std::vector<actors::ActionProposal> best_proposals;
  Evaluation best_eval;
  double best_z = -std::numeric_limits<double>::infinity();

  for (int attempt = 0;; ++attempt) {
    Evaluation ev = evaluate(t, robots, proposals, chain, config, gateway, attempt);

    RoundLog log;
    log.step = step;
    log.attempt = attempt;
    log.q_global = ev.global.score;
    log.fusion = ev.fusion;
    log.chain_hops = ev.hops;
    for (const auto& r : robots) log.robot_ids.push_back(r.robot_id);
    for (const auto& v : ev.locals) log.q.push_back(v.score);
    for (std::size_t idx : ev.fusion.requery_targets) log.targets.push_back(robots[idx].robot_id);

    const bool accepted = ev.fusion.z >= config.fusion.z_th;
    if (ev.fusion.z > best_z) {
      best_z = ev.fusion.z;
      best_proposals = proposals;
      best_eval = ev;
    }

    // With no target below Z there is nobody to re-query; accept the best seen.
    if (accepted || attempt >= config.fusion.max_requery || ev.fusion.requery_targets.empty()) {
      log.forced = !accepted;
      out.logs.push_back(std::move(log));
      out.forced = !accepted;
      out.requeries = attempt;
      if (accepted) {
        out.accepted = std::move(proposals);
        out.local_verdicts = std::move(ev.locals);
        out.global_verdict = std::move(ev.global);
        out.z = ev.fusion.z;
      } else {
        out.accepted = std::move(best_proposals);
        out.local_verdicts = std::move(best_eval.locals);
        out.global_verdict = std::move(best_eval.global);
        out.z = best_z;
      }
      return out;
    }
    out.logs.push_back(std::move(log));

    // Feed critic reasoning back to every target, then re-propose only those.
    const std::vector<std::size_t> targets = ev.fusion.requery_targets;
    for (std::size_t idx : targets) {
      robots[idx].feedback.push({attempt, ev.locals[idx].reasoning, ev.global.reasoning});
    }
    auto repropose = [&](std::size_t idx) {
      RobotContext& r = robots[idx];
      return actors::propose(r.robot_id, r.world_text, config.task, r.persona, r.feedback, gateway, attempt + 1, t);
    };
    if (config.concurrent && targets.size() > 1) {
      std::vector<std::future<actors::ActionProposal>> pending;
      for (std::size_t idx : targets) pending.push_back(std::async(std::launch::async, repropose, idx));
      for (std::size_t k = 0; k < targets.size(); ++k) proposals[targets[k]] = pending[k].get();
    } else {
      for (std::size_t idx : targets) proposals[idx] = repropose(idx);
    }
  }
}

}  // namespace samalm::fusion
