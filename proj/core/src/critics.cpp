#include "samalm/critics.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <stdexcept>

#include "samalm/world_model.hpp"

namespace samalm::critics {
namespace {

std::string human_label(int id) { return fmt::format("human-{}", id); }
std::string robot_label(int id) { return fmt::format("robot-{}", id); }

double total(const std::vector<PenaltyItem>& items) {
  double sum = 0.0;
  for (const auto& item : items) sum += item.magnitude;
  return sum;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void CriticParams::validate() const {
  if (n_th < 1) throw std::invalid_argument("critic: n_th must be >= 1");
  if (k < 1) throw std::invalid_argument("critic: k must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("critic: dt must be positive");
  if (!(human_radius > 0.0)) throw std::invalid_argument("critic: human_radius must be positive");
}

void to_json(nlohmann::json& j, const CriticParams& p) {
  j = {{"n_th", p.n_th},
       {"k", p.k},
       {"t_soft", p.t_soft},
       {"score_base", p.score_base},
       {"near_margin", p.near_margin},
       {"human_radius", p.human_radius},
       {"dt", p.dt},
       {"weights",
        {{"social_zone", p.weights.social_zone},
         {"near_collision", p.weights.near_collision},
         {"high_risk", p.weights.high_risk},
         {"robot_proximity", p.weights.robot_proximity},
         {"overtime", p.weights.overtime},
         {"group_crowding", p.weights.group_crowding}}}};
}

void from_json(const nlohmann::json& j, CriticParams& p) {
  p.n_th = j.value("n_th", p.n_th);
  p.k = j.value("k", p.k);
  p.t_soft = j.value("t_soft", p.t_soft);
  p.score_base = j.value("score_base", p.score_base);
  p.near_margin = j.value("near_margin", p.near_margin);
  p.human_radius = j.value("human_radius", p.human_radius);
  p.dt = j.value("dt", p.dt);
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    p.weights.social_zone = w.value("social_zone", p.weights.social_zone);
    p.weights.near_collision = w.value("near_collision", p.weights.near_collision);
    p.weights.high_risk = w.value("high_risk", p.weights.high_risk);
    p.weights.robot_proximity = w.value("robot_proximity", p.weights.robot_proximity);
    p.weights.overtime = w.value("overtime", p.weights.overtime);
    p.weights.group_crowding = w.value("group_crowding", p.weights.group_crowding);
  }
}

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::SocialZone: return "social_zone";
    case Branch::NearCollision: return "near_collision";
    case Branch::HighRiskArea: return "high_risk_area";
    case Branch::RobotProximity: return "robot_proximity";
    case Branch::Overtime: return "overtime";
    case Branch::GroupCrowding: return "group_crowding";
  }
  return "unknown";
}

Branch branch_from_string(std::string_view s) {
  for (Branch b : {Branch::SocialZone, Branch::NearCollision, Branch::HighRiskArea, Branch::RobotProximity,
                   Branch::Overtime, Branch::GroupCrowding}) {
    if (to_string(b) == s) return b;
  }
  throw std::invalid_argument(fmt::format("unknown penalty branch '{}'", s));
}

nlohmann::json to_json(const CriticVerdict& v) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& p : v.penalties) {
    items.push_back({{"branch", std::string(to_string(p.branch))},
                     {"magnitude", p.magnitude},
                     {"subjects", p.subjects},
                     {"detail", p.detail}});
  }
  nlohmann::json scope = v.scope.global ? nlohmann::json("global") : nlohmann::json(robot_label(v.scope.robot_id));
  return {{"scope", scope}, {"score", v.score}, {"penalties", items}, {"reasoning", v.reasoning}};
}

int crowd_count(const sim::LocalObservation& obs, Vec2 action, const sim::RobotPersona& persona,
                const CriticParams& params, int steps) {
  const double horizon = steps * params.dt;
  const Vec2 self_p = obs.self.p + action * horizon;
  const double dis_s = persona.rho_pref + persona.radius + params.human_radius;
  int count = 0;
  for (const auto& h : obs.humans) {
    if (distance(h.p + h.v * horizon, self_p) < dis_s) ++count;
  }
  return count;
}

CriticVerdict local_penalty(const sim::LocalObservation& obs, Vec2 action, const sim::RobotPersona& persona,
                            const CriticParams& params) {
  CriticVerdict verdict;
  verdict.scope = {false, obs.observer_id};

  const Vec2 self_next = obs.self.p + action * params.dt;
  const double dis_c = persona.radius + params.human_radius;
  const double dis_s = persona.rho_pref + dis_c;

  for (const auto& h : obs.humans) {
    const double d = distance(h.p + h.v * params.dt, self_next);
    if (d < dis_c + params.near_margin) {
      verdict.penalties.push_back({Branch::NearCollision, params.weights.near_collision, {human_label(h.id)},
                                   fmt::format("predicted distance {:.2f} m < {:.2f} m", d, dis_c + params.near_margin)});
    } else if (d < dis_s) {
      verdict.penalties.push_back({Branch::SocialZone, params.weights.social_zone, {human_label(h.id)},
                                   fmt::format("predicted distance {:.2f} m < social distance {:.2f} m", d, dis_s)});
    }
  }

  const double horizon = params.k * params.dt;
  const Vec2 self_k = obs.self.p + action * horizon;
  std::vector<std::string> crowd;
  for (const auto& h : obs.humans) {
    if (distance(h.p + h.v * horizon, self_k) < dis_s) crowd.push_back(human_label(h.id));
  }
  const int n = static_cast<int>(crowd.size());
  if (n > params.n_th) {
    verdict.penalties.push_back({Branch::HighRiskArea, params.weights.high_risk * (n - params.n_th), std::move(crowd),
                                 fmt::format("{} humans inside {:.2f} m after {} steps", n, dis_s, params.k)});
  }

  verdict.score = params.score_base - total(verdict.penalties);
  return verdict;
}

CriticVerdict global_penalty(std::span<const sim::LocalObservation> observations, std::span<const Vec2> actions,
                             double t, const CriticParams& params) {
  if (observations.size() != actions.size()) {
    throw sim::ContractViolation("global_penalty: one action per observation required");
  }
  CriticVerdict verdict;
  verdict.scope = {true, -1};
  const std::size_t n = observations.size();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = observations[i].self;
      const auto& b = observations[j].self;
      const double d = distance(a.p + actions[i] * params.dt, b.p + actions[j] * params.dt);
      const double dis_c = a.persona.radius + b.persona.radius;
      if (d < dis_c + params.near_margin) {
        verdict.penalties.push_back({Branch::RobotProximity, params.weights.robot_proximity,
                                     {robot_label(a.id), robot_label(b.id)},
                                     fmt::format("predicted distance {:.2f} m < {:.2f} m", d, dis_c + params.near_margin)});
      }
    }
  }

  if (t > params.t_soft && n > 0) {
    double t_m = 0.0;
    for (const auto& o : observations) t_m += o.self.persona.nav_time;
    t_m /= static_cast<double>(n);
    const double magnitude = params.weights.overtime * (t - t_m);
    if (magnitude > 0.0) {
      verdict.penalties.push_back(
          {Branch::Overtime, magnitude, {}, fmt::format("t = {:.2f} s against average {:.2f} s", t, t_m)});
    }
  }

  std::vector<std::string> crowded;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& obs = observations[i];
    if (crowd_count(obs, actions[i], obs.self.persona, params, params.k) > params.n_th) {
      crowded.push_back(robot_label(obs.self.id));
    }
  }
  const double count = static_cast<double>(crowded.size());
  if (count > 0.5 * static_cast<double>(n)) {
    verdict.penalties.push_back({Branch::GroupCrowding, params.weights.group_crowding * count, std::move(crowded),
                                 fmt::format("{} of {} robots surrounded by crowds", count, n)});
  }

  verdict.score = params.score_base - total(verdict.penalties);
  return verdict;
}

std::string template_reasoning(const CriticScope& scope, std::span<const PenaltyItem> items) {
  const std::string who = scope.global ? std::string("the team") : robot_label(scope.robot_id);
  if (items.empty()) {
    return scope.global ? "approved: the joint action raises no team-level issues."
                        : fmt::format("approved: the action keeps {} clear of every pedestrian's social distance.", who);
  }
  std::vector<std::string> sentences;
  for (const auto& item : items) {
    const std::string subjects = fmt::format("{}", fmt::join(item.subjects, ", "));
    switch (item.branch) {
      case Branch::NearCollision:
        sentences.push_back(fmt::format("the action would bring {} too close to {} (near collision)", who, subjects));
        break;
      case Branch::SocialZone:
        sentences.push_back(fmt::format("the action would intrude on the social distance of {}", subjects));
        break;
      case Branch::HighRiskArea:
        sentences.push_back(fmt::format("{} pedestrians ({}) would crowd {} within the lookahead; steer away from them",
                                        item.subjects.size(), subjects, who));
        break;
      case Branch::RobotProximity:
        sentences.push_back(fmt::format("{} would come too close to each other", fmt::join(item.subjects, " and ")));
        break;
      case Branch::Overtime:
        sentences.push_back(fmt::format("the team is running over time (-{:.2f}); head more directly to the goals",
                                        item.magnitude));
        break;
      case Branch::GroupCrowding:
        sentences.push_back(fmt::format("{} robots ({}) would be surrounded by crowds", item.subjects.size(), subjects));
        break;
    }
  }
  return fmt::format("{}.", fmt::join(sentences, "; "));
}

std::string render_penalty_lines(std::span<const PenaltyItem> items) {
  std::string out;
  for (const auto& item : items) {
    out += fmt::format("- branch={} magnitude={} subjects={}\n", to_string(item.branch),
                       wm::format_number(item.magnitude),
                       item.subjects.empty() ? std::string("none") : fmt::format("{}", fmt::join(item.subjects, ",")));
  }
  return out;
}

std::vector<PenaltyItem> parse_penalty_lines(std::string_view text) {
  std::vector<PenaltyItem> items;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.starts_with("- branch=")) continue;
    line.remove_prefix(2);

    PenaltyItem item;
    bool ok = true;
    while (!line.empty() && ok) {
      const auto space = line.find(' ');
      const std::string_view token = line.substr(0, space);
      line = space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
      const auto eq = token.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = token.substr(0, eq);
      const std::string_view value = token.substr(eq + 1);
      try {
        if (key == "branch") {
          item.branch = branch_from_string(value);
        } else if (key == "magnitude") {
          const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), item.magnitude);
          ok = ec == std::errc{};
        } else if (key == "subjects" && value != "none") {
          std::string_view rest = value;
          while (!rest.empty()) {
            const auto comma = rest.find(',');
            item.subjects.emplace_back(rest.substr(0, comma));
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
          }
        }
      } catch (const std::invalid_argument&) {
        ok = false;
      }
    }
    if (ok) items.push_back(std::move(item));
  }
  return items;
}

}  // namespace samalm::critics
