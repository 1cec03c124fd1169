#include "samalm/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace samalm::fusion {

void FusionParams::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("fusion: kappa must be positive");
  if (!(eps_clamp > 0.0)) throw std::invalid_argument("fusion: eps_clamp must be positive");
  if (!(z_th > 0.0 && z_th <= 100.0)) throw std::invalid_argument("fusion: z_th must lie in (0, 100]");
  if (max_requery < 0) throw std::invalid_argument("fusion: max_requery must be >= 0");
}

void to_json(nlohmann::json& j, const FusionParams& p) {
  j = {{"kappa", p.kappa}, {"z_th", p.z_th}, {"eps_clamp", p.eps_clamp}, {"max_requery", p.max_requery}};
}

void from_json(const nlohmann::json& j, FusionParams& p) {
  p.kappa = j.value("kappa", p.kappa);
  p.z_th = j.value("z_th", p.z_th);
  p.eps_clamp = j.value("eps_clamp", p.eps_clamp);
  p.max_requery = j.value("max_requery", p.max_requery);
}

std::vector<double> confidence(std::span<const double> local_scores, const FusionParams& params) {
  if (local_scores.empty()) throw sim::ContractViolation("confidence: at least one score required");
  std::vector<double> c(local_scores.size());
  std::transform(local_scores.begin(), local_scores.end(), c.begin(),
                 [&](double q) { return std::clamp(q, params.eps_clamp, 100.0); });
  const double sum = std::accumulate(c.begin(), c.end(), 0.0);
  for (double& x : c) x /= sum;
  return c;
}

FusionResult fuse(std::span<const double> local_scores, double global_score, const FusionParams& params) {
  FusionResult r;
  r.confidence = confidence(local_scores, params);
  const std::size_t n = local_scores.size();

  double h = 0.0;
  for (double c : r.confidence) {
    if (c > 0.0) h -= c * std::log(c);
  }
  r.entropy = params.kappa * h;

  const bool uniform = std::all_of(local_scores.begin(), local_scores.end(), [&](double q) {
    return std::clamp(q, params.eps_clamp, 100.0) == std::clamp(local_scores[0], params.eps_clamp, 100.0);
  });
  if (n == 1 || uniform) {
    r.omega = 1.0;
  } else {
    r.omega = std::clamp(r.entropy / (params.kappa * std::log(static_cast<double>(n))), 0.0, 1.0);
  }

  const double mean = std::accumulate(local_scores.begin(), local_scores.end(), 0.0) / static_cast<double>(n);
  r.z = r.omega * mean + (1.0 - r.omega) * global_score;
  if (r.z < params.z_th) r.requery_targets = select_requery_targets(local_scores, r.z);
  return r;
}

std::vector<std::size_t> select_requery_targets(std::span<const double> local_scores, double z) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < local_scores.size(); ++i) {
    if (local_scores[i] < z) out.push_back(i);
  }
  return out;
}

ChainTopology build_chain(std::span<const ChainMember> members) {
  if (members.empty()) throw sim::ContractViolation("build_chain: at least one robot required");
  std::vector<ChainMember> remaining(members.begin(), members.end());
  std::sort(remaining.begin(), remaining.end(), [](const auto& a, const auto& b) { return a.robot_id < b.robot_id; });

  ChainTopology chain;
  ChainMember current = remaining.front();
  remaining.erase(remaining.begin());
  chain.order.push_back(current.robot_id);
  chain.leader = current.robot_id;

  while (!remaining.empty()) {
    // remaining stays sorted by id, so the first strict minimum wins ties.
    auto nearest = remaining.begin();
    double best = norm_sq(nearest->p - current.p);
    for (auto it = remaining.begin() + 1; it != remaining.end(); ++it) {
      const double d = norm_sq(it->p - current.p);
      if (d < best) {
        best = d;
        nearest = it;
      }
    }
    current = *nearest;
    remaining.erase(nearest);
    chain.order.push_back(current.robot_id);
  }
  return chain;
}

}  // namespace samalm::fusion
