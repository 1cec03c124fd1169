#include "samalm/harness.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <stdexcept>

#include "samalm/actors.hpp"
#include "samalm/orchestrator.hpp"
#include "samalm/random.hpp"
#include "samalm/world_model.hpp"

namespace samalm::harness {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Decentralized: return "decentralized";
    case Mode::Centralized: return "centralized";
    case Mode::NoCritic: return "no-critic";
  }
  return "?";
}

Mode mode_from_string(std::string_view s) {
  if (s == "decentralized") return Mode::Decentralized;
  if (s == "centralized") return Mode::Centralized;
  if (s == "no-critic" || s == "no_critic" || s == "nocritic") return Mode::NoCritic;
  throw std::invalid_argument(fmt::format("unknown mode '{}'", s));
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Success: return "success";
    case Outcome::Collision: return "collision";
    case Outcome::Timeout: return "timeout";
    case Outcome::Aborted: return "aborted";
  }
  return "?";
}

Outcome outcome_from_string(std::string_view s) {
  if (s == "success") return Outcome::Success;
  if (s == "collision") return Outcome::Collision;
  if (s == "timeout") return Outcome::Timeout;
  if (s == "aborted") return Outcome::Aborted;
  throw std::invalid_argument(fmt::format("unknown outcome '{}'", s));
}

void ExperimentConfig::validate() const {
  scenario.validate();
  backend.validate();
  fusion.validate();
  critic.validate();
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (scripted.fault_probability < 0.0 || scripted.fault_probability > 1.0) {
    throw std::invalid_argument("fault_probability must lie in [0, 1]");
  }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"scenario", c.scenario},
       {"mode", to_string(c.mode)},
       {"backend", c.backend},
       {"scripted",
        {{"fault", llm::to_string(c.scripted.fault)},
         {"fault_probability", c.scripted.fault_probability},
         {"fault_seed", c.scripted.fault_seed}}},
       {"episodes", c.episodes},
       {"seed", c.seed},
       {"fusion", c.fusion},
       {"critic", c.critic},
       {"social",
        {{"discomfort", c.social.discomfort}, {"path", c.social.path}, {"timeliness", c.social.timeliness}}},
       {"llm_critics", c.llm_critics},
       {"jobs", c.jobs},
       {"out_dir", c.out_dir.string()}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (j.contains("scenario")) {
    c.scenario = j.at("scenario").get<sim::ScenarioConfig>();
    c.seed = c.scenario.seed;
  }
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("backend")) c.backend = j.at("backend").get<llm::BackendConfig>();
  if (j.contains("scripted")) {
    const auto& s = j.at("scripted");
    if (s.contains("fault")) c.scripted.fault = llm::fault_mode_from_string(s.at("fault").get<std::string>());
    c.scripted.fault_probability = s.value("fault_probability", c.scripted.fault_probability);
    c.scripted.fault_seed = s.value("fault_seed", c.scripted.fault_seed);
  }
  c.episodes = j.value("episodes", c.episodes);
  c.seed = j.value("seed", c.seed);
  if (j.contains("fusion")) c.fusion = j.at("fusion").get<fusion::FusionParams>();
  if (j.contains("critic")) c.critic = j.at("critic").get<critics::CriticParams>();
  if (j.contains("social")) {
    const auto& s = j.at("social");
    c.social.discomfort = s.value("discomfort", c.social.discomfort);
    c.social.path = s.value("path", c.social.path);
    c.social.timeliness = s.value("timeliness", c.social.timeliness);
  }
  c.llm_critics = j.value("llm_critics", c.llm_critics);
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open config {}", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(fmt::format("config {}: {}", path.string(), e.what()));
  }
  // A bare scenario file is accepted as well.
  if (!j.contains("scenario") && (j.contains("n_robots") || j.contains("arena_side_m"))) {
    ExperimentConfig c;
    c.scenario = j.get<sim::ScenarioConfig>();
    c.seed = c.scenario.seed;
    return c;
  }
  return j.get<ExperimentConfig>();
}

double EpisodeResult::nav_time_mean() const {
  if (nav_times.empty()) return 0.0;
  return std::accumulate(nav_times.begin(), nav_times.end(), 0.0) / static_cast<double>(nav_times.size());
}

double EpisodeResult::path_length_total() const {
  return std::accumulate(path_lengths.begin(), path_lengths.end(), 0.0);
}

double EpisodeResult::straight_line_total() const {
  return std::accumulate(straight_lines.begin(), straight_lines.end(), 0.0);
}

std::uint64_t episode_seed(std::uint64_t master_seed, int episode_index) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(episode_index));
}

namespace {

constexpr std::uint64_t kHumanStream = 0x68756d616eULL;

struct EpisodeContext {
  const ExperimentConfig& config;
  critics::CriticParams critic;
  actors::TaskConfigText task;
  sim::SimParams params;
};

struct RobotView {
  int robot_id;
  sim::LocalObservation obs;
  std::string text;
};

std::vector<RobotView> observe_all(const sim::SimState& state, const EpisodeContext& ctx,
                                   std::map<int, sim::LocalObservation>& prev) {
  std::vector<RobotView> views;
  for (int id : state.active_robot_ids()) {
    sim::LocalObservation obs = sim::observe(state, id, ctx.params);
    const auto it = prev.find(id);
    const wm::WorldModelGraph graph =
        wm::build_graph(obs, it == prev.end() ? nullptr : &it->second, {ctx.params.dt, wm::WorldModelParams{}.trend_epsilon});
    std::string text = wm::textualize(graph, obs.self.persona).text;
    prev[id] = obs;
    views.push_back({id, std::move(obs), std::move(text)});
  }
  return views;
}

int count_discomfort(const sim::SimState& state, const std::vector<int>& stepped, double human_radius) {
  int count = 0;
  for (int id : stepped) {
    const sim::RobotState& r = sim::robot_by_id(state, id);
    const double dis_s = r.persona.rho_pref + r.persona.radius + human_radius;
    for (const auto& h : state.humans) {
      if (distance(r.p, h.p) < dis_s) {
        ++count;
        break;
      }
    }
  }
  return count;
}

std::vector<Vec2> centralized_actions(const std::vector<RobotView>& views, const sim::SimState& state,
                                      const EpisodeContext& ctx, llm::Gateway& gateway) {
  std::vector<actors::JointRobotInput> inputs;
  for (const auto& v : views) inputs.push_back({v.robot_id, sim::robot_by_id(state, v.robot_id).persona, v.text});
  const llm::Prompt prompt = actors::build_joint_prompt(inputs, ctx.task, state.t);
  std::vector<Vec2> actions;
  for (int parse_try = 0; parse_try < 2; ++parse_try) {
    const auto proposals = actors::parse_joint_actions(gateway.complete(prompt).text, inputs);
    actions.clear();
    bool degraded = false;
    for (const auto& p : proposals) {
      actions.push_back(p.action);
      degraded |= p.degraded;
    }
    if (!degraded) return actions;
    spdlog::warn("joint actor reply unparseable at t={}", state.t);
  }
  return actions;
}

}  // namespace

EpisodeRun run_episode(const ExperimentConfig& config, int episode_index, std::uint64_t seed,
                       llm::Gateway& gateway) {
  EpisodeContext ctx{config, config.critic, {}, config.scenario.sim_params()};
  ctx.critic.dt = config.scenario.dt;
  ctx.critic.human_radius = config.scenario.human_radius;
  ctx.task = actors::TaskConfigText::standard(config.scenario.dt, config.scenario.human_radius,
                                              config.scenario.robot_radius);

  EpisodeRun run;
  EpisodeResult& res = run.result;
  res.episode = episode_index;
  res.seed = seed;

  sim::SimState state = sim::generate_scenario(config.scenario, seed);
  Rng human_rng(derive_seed(seed, kHumanStream));

  std::map<int, std::size_t> slot;  // robot id -> index into per-robot vectors
  double t_m_sum = 0.0;
  for (const auto& r : state.robots) {
    slot[r.id] = res.nav_times.size();
    res.nav_times.push_back(0.0);
    res.path_lengths.push_back(0.0);
    res.straight_lines.push_back(distance(r.p, r.goal));
    t_m_sum += r.persona.nav_time;
  }
  res.t_m_mean = state.robots.empty() ? 0.0 : t_m_sum / static_cast<double>(state.robots.size());

  const std::size_t buffer_capacity = static_cast<std::size_t>(std::max(1, config.fusion.max_requery));
  std::map<int, actors::FeedbackBuffer> buffers;
  for (const auto& r : state.robots) buffers.emplace(r.id, actors::FeedbackBuffer(buffer_capacity));
  std::map<int, sim::LocalObservation> prev;

  fusion::RoundConfig round_cfg;
  round_cfg.fusion = config.fusion;
  round_cfg.critic = ctx.critic;
  round_cfg.task = ctx.task;
  round_cfg.llm_critics = config.llm_critics;
  round_cfg.concurrent = gateway.mode() == llm::BackendMode::Http;

  run.logs.trajectory.push_back(sim::trajectory_record(state, {}));
  bool finished = false;
  try {
    while (!finished && state.any_active()) {
      const std::vector<RobotView> views = observe_all(state, ctx, prev);
      std::vector<int> stepped;
      for (const auto& v : views) stepped.push_back(v.robot_id);

      std::vector<Vec2> actions;
      if (config.mode == Mode::Centralized) {
        actions = centralized_actions(views, state, ctx, gateway);
      } else {
        std::vector<actors::ActionProposal> proposals;
        for (const auto& v : views) {
          proposals.push_back(actors::propose(v.robot_id, v.text, ctx.task, v.obs.self.persona,
                                              buffers.at(v.robot_id), gateway, 0, state.t));
        }
        if (config.mode == Mode::NoCritic) {
          for (const auto& p : proposals) actions.push_back(p.action);
        } else {
          std::vector<fusion::RobotContext> robots;
          std::vector<fusion::ChainMember> members;
          for (const auto& v : views) {
            robots.push_back({v.robot_id, v.obs, v.text, v.obs.self.persona, std::move(buffers.at(v.robot_id))});
            members.push_back({v.robot_id, v.obs.self.p});
          }
          const fusion::ChainTopology chain = fusion::build_chain(members);
          fusion::RoundOutcome outcome =
              fusion::verification_round(state.step_index, state.t, robots, std::move(proposals), chain, round_cfg,
                                         gateway);
          for (auto& r : robots) buffers.at(r.robot_id) = std::move(r.feedback);
          for (const auto& p : outcome.accepted) actions.push_back(p.action);
          res.requery_count += outcome.requeries;
          if (outcome.forced) ++res.forced_count;
          for (const auto& log : outcome.logs) run.logs.rounds.push_back(fusion::to_json(log));
        }
      }
      for (std::size_t i = 0; i < actions.size(); ++i) {
        actions[i] = actors::clamp_speed(actions[i], sim::robot_by_id(state, stepped[i]).persona.v_pref);
      }

      const std::vector<Vec2> human_vels = sim::human_policy_step(state, human_rng, ctx.params);
      sim::StepResult next = sim::step(state, actions, human_vels, ctx.params);
      for (std::size_t i = 0; i < actions.size(); ++i) {
        res.path_lengths[slot.at(stepped[i])] += norm(actions[i]) * ctx.params.dt;
      }
      state = std::move(next.state);
      res.steps = state.step_index;
      res.robot_steps += static_cast<int>(stepped.size());
      res.discomfort_steps += count_discomfort(state, stepped, config.scenario.human_radius);

      for (const auto& e : next.events) {
        switch (e.kind) {
          case sim::EventKind::Arrival: res.nav_times[slot.at(e.first)] = e.t; break;
          case sim::EventKind::RobotHumanCollision:
            ++res.robot_human_collisions;
            res.outcome = Outcome::Collision;
            finished = true;
            break;
          case sim::EventKind::RobotRobotCollision:
            ++res.robot_robot_collisions;
            res.outcome = Outcome::Collision;
            finished = true;
            break;
          case sim::EventKind::Timeout:
            if (!finished) res.outcome = Outcome::Timeout;
            finished = true;
            break;
        }
      }
      run.logs.trajectory.push_back(sim::trajectory_record(state, next.events));
    }
    if (!finished) res.outcome = Outcome::Success;
  } catch (const llm::GatewayError& e) {
    res.outcome = Outcome::Aborted;
    res.abort_reason = e.what();
    spdlog::error("episode {} aborted by backend: {}", episode_index, e.what());
  }

  res.end_time = state.t;
  for (const auto& r : state.robots) {
    if (r.status != sim::RobotStatus::Arrived) res.nav_times[slot.at(r.id)] = state.t;
  }
  return run;
}

double episode_social_score(Outcome outcome, int discomfort_steps, int robot_steps, double straight_line_total,
                            double path_length_total, double t_m_mean, double nav_time_mean,
                            const SocialScoreWeights& w) {
  if (outcome != Outcome::Success) return 0.0;
  const double discomfort =
      robot_steps > 0 ? std::min(1.0, static_cast<double>(discomfort_steps) / static_cast<double>(robot_steps)) : 0.0;
  const double path_den = std::max(path_length_total, straight_line_total);
  const double path = path_den > 0.0 ? straight_line_total / path_den : 1.0;
  const double timely = nav_time_mean > 0.0 ? std::min(1.0, t_m_mean / nav_time_mean) : 1.0;
  return 100.0 * (w.discomfort * (1.0 - discomfort) + w.path * path + w.timeliness * timely);
}

double episode_social_score(const EpisodeResult& r, const SocialScoreWeights& w) {
  return episode_social_score(r.outcome, r.discomfort_steps, r.robot_steps, r.straight_line_total(),
                              r.path_length_total(), r.t_m_mean, r.nav_time_mean(), w);
}

Summary summarize(const std::vector<EpisodeResult>& results, const SocialScoreWeights& w) {
  Summary s;
  s.episodes = static_cast<int>(results.size());
  double ss_sum = 0.0;
  for (const auto& r : results) {
    if (r.outcome == Outcome::Success) ++s.successes;
    if (r.outcome == Outcome::Aborted) ++s.aborted;
    s.robot_robot_collisions += r.robot_robot_collisions;
    ss_sum += episode_social_score(r, w);
  }
  const bool exclude_aborted = s.episodes > 0 && s.aborted * 10 >= s.episodes;
  s.denominator = exclude_aborted ? s.episodes - s.aborted : s.episodes;
  if (s.denominator > 0) {
    s.sr = 100.0 * static_cast<double>(s.successes) / static_cast<double>(s.denominator);
    s.ss = static_cast<int>(std::lround(ss_sum / static_cast<double>(s.denominator)));
  }
  return s;
}

double social_score(const std::vector<EpisodeResult>& results, const SocialScoreWeights& w) {
  return summarize(results, w).ss;
}

std::string episode_file_name(int episode_index) { return fmt::format("episode_{:03d}.jsonl", episode_index); }

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  for (const auto& line : lines) out << line.dump() << '\n';
  if (!out) throw std::runtime_error(fmt::format("write failed for {}", path.string()));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("write failed for {}", path.string()));
}

void prepare_dirs(const std::filesystem::path& out_dir) {
  for (const char* sub : {"trajectories", "rounds", "transcripts"}) {
    std::filesystem::create_directories(out_dir / sub);
  }
}

void write_episode_logs(const std::filesystem::path& out_dir, int episode_index, const EpisodeLogs& logs) {
  write_lines(out_dir / "trajectories" / episode_file_name(episode_index), logs.trajectory);
  write_lines(out_dir / "rounds" / episode_file_name(episode_index), logs.rounds);
}

void write_summary_files(const MetricsReport& report, const std::filesystem::path& out_dir) {
  write_text(out_dir / std::string(kMetricsFile), metrics_csv(report));
  write_text(out_dir / "config.json", report.config.dump(2) + "\n");
}

std::unique_ptr<llm::Gateway> episode_gateway(const ExperimentConfig& config, int episode_index) {
  llm::BackendConfig backend = config.backend;
  if (backend.mode == llm::BackendMode::Replay) {
    const std::filesystem::path source = backend.transcript_path;
    const auto per_episode = source / episode_file_name(episode_index);
    if (std::filesystem::is_directory(source) && std::filesystem::exists(per_episode)) {
      backend.transcript_path = per_episode.string();
    }
  } else if (!config.out_dir.empty()) {
    const auto path = config.out_dir / "transcripts" / episode_file_name(episode_index);
    std::filesystem::remove(path);
    backend.transcript_path = path.string();
  } else {
    backend.transcript_path.clear();
  }
  return llm::make_gateway(backend, config.scripted);
}

}  // namespace

std::string metrics_csv(const MetricsReport& report) {
  std::string out =
      "episode,seed,outcome,steps,end_time,nav_time_mean,path_length_total,straight_line_total,t_m_mean,"
      "discomfort_steps,robot_steps,requery_count,forced_count,robot_robot_collisions,robot_human_collisions,"
      "social_score,sr,ss\n";
  if (report.episodes.empty()) return out;
  const SocialScoreWeights w = report.config.contains("social")
                                   ? SocialScoreWeights{report.config["social"].value("discomfort", 0.5),
                                                        report.config["social"].value("path", 0.3),
                                                        report.config["social"].value("timeliness", 0.2)}
                                   : SocialScoreWeights{};
  for (const auto& r : report.episodes) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},,\n", r.episode, r.seed, to_string(r.outcome),
                       r.steps, r.end_time, r.nav_time_mean(), r.path_length_total(), r.straight_line_total(),
                       r.t_m_mean, r.discomfort_steps, r.robot_steps, r.requery_count, r.forced_count,
                       r.robot_robot_collisions, r.robot_human_collisions, episode_social_score(r, w));
  }
  const Summary& s = report.summary;
  out += fmt::format("summary,,,{},,,,,,,,,,{},,,{},{}\n", s.episodes, s.robot_robot_collisions, s.sr, s.ss);
  return out;
}

void export_report(const MetricsReport& report, const std::vector<EpisodeLogs>& logs,
                   const std::filesystem::path& out_dir) {
  prepare_dirs(out_dir);
  for (std::size_t i = 0; i < logs.size() && i < report.episodes.size(); ++i) {
    write_episode_logs(out_dir, report.episodes[i].episode, logs[i]);
  }
  write_summary_files(report, out_dir);
}

MetricsReport run_batch(const ExperimentConfig& config) {
  config.validate();
  if (!config.out_dir.empty()) prepare_dirs(config.out_dir);

  auto run_one = [&config](int index) {
    auto gateway = episode_gateway(config, index);
    EpisodeRun run = run_episode(config, index, episode_seed(config.seed, index), *gateway);
    if (!config.out_dir.empty()) write_episode_logs(config.out_dir, index, run.logs);
    return run.result;
  };

  MetricsReport report;
  report.episodes.resize(static_cast<std::size_t>(config.episodes));
  if (config.jobs <= 1) {
    for (int i = 0; i < config.episodes; ++i) report.episodes[static_cast<std::size_t>(i)] = run_one(i);
  } else {
    for (int start = 0; start < config.episodes; start += config.jobs) {
      const int end = std::min(config.episodes, start + config.jobs);
      std::vector<std::future<EpisodeResult>> pending;
      for (int i = start; i < end; ++i) pending.push_back(std::async(std::launch::async, run_one, i));
      for (int i = start; i < end; ++i) {
        report.episodes[static_cast<std::size_t>(i)] = pending[static_cast<std::size_t>(i - start)].get();
      }
    }
  }

  report.summary = summarize(report.episodes, config.social);
  report.config = config;
  if (report.summary.aborted > 0) {
    spdlog::error("{} of {} episodes aborted by the backend", report.summary.aborted, report.summary.episodes);
  }
  if (!config.out_dir.empty()) write_summary_files(report, config.out_dir);
  return report;
}

}  // namespace samalm::harness
