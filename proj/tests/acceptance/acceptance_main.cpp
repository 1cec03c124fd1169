// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <numeric>
#include <spdlog/spdlog.h>
#include <sstream>
#include <string>
#include <vector>

#include "chat_stub.hpp"
#include "critic_oracle.hpp"
#include "fusion_oracle.hpp"
#include "generators.hpp"
#include "requery_fixture.hpp"
#include "samalm/fusion.hpp"
#include "samalm/harness.hpp"
#include "samalm/scenario.hpp"

namespace fs = std::filesystem;
using namespace samalm;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path fresh_dir(const fs::path& root, const std::string& name) {
  const fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

harness::ExperimentConfig crossing(int robots, int humans, int episodes, std::uint64_t seed) {
  harness::ExperimentConfig c;
  c.scenario.n_robots = robots;
  c.scenario.n_humans = humans;
  c.episodes = episodes;
  c.seed = seed;
  return c;
}

Verdict fusion_arithmetic() {
  const auto start = Clock::now();
  const std::vector<double> q{75, 25};
  const auto r = fusion::fuse(q, 60, {});
  const auto o = oracle::fusion_oracle(q, 60);
  // Closed form for two scores.
  const double h = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  const double omega = h / std::log(2.0);
  const double z = omega * 50.0 + (1 - omega) * 60.0;
  bool ok = std::abs(r.entropy - h) < 1e-9 && std::abs(r.omega - omega) < 1e-9 && std::abs(r.z - z) < 1e-9 &&
            std::abs(r.z - static_cast<double>(o.z)) < 1e-9 && std::abs(h - 0.5623) < 5e-5 &&
            std::abs(omega - 0.8113) < 5e-5 && std::abs(z - 51.9) < 0.05;
  const std::string detail = fmt::format("H={:.6f} omega={:.6f} Z={:.4f}", r.entropy, r.omega, r.z);

  Rng rng(20261016);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + rng.index(8);
    const auto scores = testing::random_scores(rng, n, -100.0, 100.0);
    const double qg = rng.uniform(-100.0, 100.0);
    const auto f = fusion::fuse(scores, qg, {});
    const double sum = std::accumulate(f.confidence.begin(), f.confidence.end(), 0.0);
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);
    const bool good = f.omega >= 0.0 && f.omega <= 1.0 && std::abs(sum - 1.0) <= 1e-12 &&
                      f.z >= std::min(mean, qg) - 1e-9 && f.z <= std::max(mean, qg) + 1e-9;
    if (!good) ++violations;
  }
  const double elapsed = seconds_since(start);
  ok = ok && violations == 0 && elapsed < 5.0;
  return {ok, fmt::format("{}; 10000 random vectors, {} violations; {:.2f} s", detail, violations, elapsed)};
}

Verdict critic_oracle() {
  const auto start = Clock::now();
  Rng rng(7);
  const critics::CriticParams params;
  int mismatches = 0;
  int items = 0;
  std::string first;
  auto check = [&](const critics::CriticVerdict& engine, const oracle::OracleVerdict& expect) {
    items += static_cast<int>(engine.penalties.size());
    const std::string diff = oracle::compare(engine, expect);
    if (!diff.empty() && mismatches++ == 0) first = diff;
  };
  for (int i = 0; i < 10000; ++i) {
    const auto scene = testing::random_team(rng, 5, 10);
    for (std::size_t r = 0; r < scene.observations.size(); ++r) {
      const auto& obs = scene.observations[r];
      check(critics::local_penalty(obs, scene.actions[r], obs.self.persona, params),
            oracle::local_oracle(obs, scene.actions[r], obs.self.persona, params));
    }
    check(critics::global_penalty(scene.observations, scene.actions, scene.t, params),
          oracle::global_oracle(scene.observations, scene.actions, scene.t, params));
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 30.0,
          fmt::format("10000 scenes, {} penalty items, {} mismatches{}; {:.2f} s", items, mismatches,
                      first.empty() ? "" : " (" + first + ")", elapsed)};
}

Verdict requery_efficacy() {
  int good = 0;
  int near_collision_first = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto trial = testing::run_requery_trial(seed, llm::FaultMode::UnsafeUntilFeedback);
    const bool nc = std::any_of(trial.first_verdict.penalties.begin(), trial.first_verdict.penalties.end(),
                                [](const auto& p) { return p.branch == critics::Branch::NearCollision; });
    if (nc) ++near_collision_first;
    const auto& out = trial.outcome;
    const bool clean_final = std::all_of(out.local_verdicts.begin(), out.local_verdicts.end(),
                                         [](const auto& v) { return v.penalties.empty(); });
    if (nc && out.requeries == 1 && !out.forced && out.z >= 80.0 && clean_final) ++good;
  }
  return {good == 100, fmt::format("{}/100 trials with one re-query and final Z >= 80 ({} opened with a near "
                                   "collision)",
                                   good, near_collision_first)};
}

Verdict loop_boundedness() {
  const fusion::FusionParams params;
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto trial = testing::run_requery_trial(seed, llm::FaultMode::Incorrigible, params);
    const auto& out = trial.outcome;
    if (out.requeries == params.max_requery && out.forced && trial.actor_queries == params.max_requery + 2) ++good;
  }
  return {good == 100,
          fmt::format("{}/100 rounds ended after exactly {} re-queries, flagged forced", good, params.max_requery)};
}

Verdict pipeline_target() {
  const auto start = Clock::now();
  const auto report = harness::run_batch(crossing(3, 5, 50, 1));
  const double elapsed = seconds_since(start);
  const auto& s = report.summary;
  return {s.sr >= 80.0 && s.robot_robot_collisions == 0 && elapsed < 120.0,
          fmt::format("SR {:.0f}%, SS {}, robot-robot collisions {}; {:.1f} s", s.sr, s.ss, s.robot_robot_collisions,
                      elapsed)};
}

Verdict ablation_direction() {
  auto with = crossing(3, 5, 50, 7);
  with.scripted.fault = llm::FaultMode::RandomUnsafe;
  with.scripted.fault_probability = 0.1;
  auto without = with;
  without.mode = harness::Mode::NoCritic;
  auto strict = with;
  strict.fusion.z_th = 97;
  const auto a = harness::run_batch(with).summary;
  const auto b = harness::run_batch(without).summary;
  const auto c = harness::run_batch(strict).summary;
  return {a.sr >= b.sr, fmt::format("decentralized SR {:.0f}% vs no-critic SR {:.0f}%; with z_th=97 decentralized "
                                    "SR {:.0f}%",
                                    a.sr, b.sr, c.sr)};
}

Verdict determinism(const fs::path& work) {
  auto cfg = crossing(3, 5, 10, 3);
  cfg.out_dir = fresh_dir(work, "det_a");
  harness::run_batch(cfg);
  auto again = cfg;
  again.out_dir = fresh_dir(work, "det_b");
  harness::run_batch(again);
  bool same = slurp(cfg.out_dir / "metrics.csv") == slurp(again.out_dir / "metrics.csv");
  for (int i = 0; i < cfg.episodes; ++i) {
    const auto name = harness::episode_file_name(i);
    same = same && slurp(cfg.out_dir / "trajectories" / name) == slurp(again.out_dir / "trajectories" / name);
  }

  // Record against an HTTP chat endpoint, then replay the transcripts offline.
  testing::ChatStub stub(testing::scripted_reply);
  auto live = crossing(3, 5, 3, 11);
  live.backend.mode = llm::BackendMode::Http;
  live.backend.endpoint_url = stub.base_url();
  live.backend.model_name = "stub";
  live.out_dir = fresh_dir(work, "det_live");
  harness::run_batch(live);
  auto replay = live;
  replay.backend.mode = llm::BackendMode::Replay;
  replay.backend.transcript_path = (live.out_dir / "transcripts").string();
  replay.out_dir = fresh_dir(work, "det_replay");
  const auto replayed = harness::run_batch(replay);
  bool reproduced = replayed.summary.aborted == 0;
  for (int i = 0; i < live.episodes; ++i) {
    const auto name = harness::episode_file_name(i);
    reproduced =
        reproduced && slurp(live.out_dir / "trajectories" / name) == slurp(replay.out_dir / "trajectories" / name);
  }
  return {same && reproduced,
          fmt::format("scripted rerun {}; replay of {} recorded HTTP episodes {}", same ? "byte-identical" : "differs",
                      live.episodes, reproduced ? "reproduces every action" : "diverges")};
}

Verdict orca_sanity() {
  sim::ScenarioConfig sc;
  sc.n_robots = 0;
  sc.n_humans = 10;
  const sim::SimParams params = sc.sim_params();
  const int steps = static_cast<int>(std::lround(sc.t_max / sc.dt));
  int overlaps = 0;
  for (std::uint64_t ep = 0; ep < 100; ++ep) {
    sim::SimState state = sim::generate_scenario(sc, derive_seed(8, ep));
    Rng rng(derive_seed(9, ep));
    for (int k = 0; k < steps; ++k) {
      const auto vels = sim::human_policy_step(state, rng, params);
      state = sim::step(state, {}, vels, params).state;
      overlaps += sim::count_human_overlaps(state);
    }
  }
  return {overlaps == 0, fmt::format("100 episodes x {} steps, {} interpenetration events", steps, overlaps)};
}

bool well_formed_logs(const fs::path& dir, int episodes, std::string& why) {
  for (int i = 0; i < episodes; ++i) {
    const auto name = harness::episode_file_name(i);
    for (const std::string sub : {"trajectories", "rounds", "transcripts"}) {
      const auto lines = lines_of(dir / sub / name);
      if (lines.empty()) {
        why = fmt::format("{}/{} is empty", sub, name);
        return false;
      }
      for (const auto& line : lines) {
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
          why = fmt::format("{}/{} holds a malformed line", sub, name);
          return false;
        }
        if (sub == "rounds" && !(j.contains("Z") && j.contains("Q") && j.contains("omega"))) {
          why = fmt::format("rounds/{} lacks fusion fields", name);
          return false;
        }
      }
    }
  }
  return true;
}

Verdict live_smoke(const fs::path& work) {
  std::unique_ptr<testing::ChatStub> stub;
  auto cfg = crossing(3, 5, 3, 21);
  cfg.backend.mode = llm::BackendMode::Http;
  cfg.backend.apply_environment();
  std::string target = "configured endpoint";
  if (cfg.backend.endpoint_url.empty()) {
    stub = std::make_unique<testing::ChatStub>(testing::scripted_reply);
    cfg.backend.endpoint_url = stub->base_url();
    cfg.backend.model_name = "stub";
    target = "local chat-completion stub (SAMALM_API_URL unset)";
  }
  cfg.jobs = 3;
  cfg.out_dir = fresh_dir(work, "live");
  const auto report = harness::run_batch(cfg);
  std::string why;
  const bool logs = well_formed_logs(cfg.out_dir, cfg.episodes, why);
  return {report.summary.aborted == 0 && logs,
          fmt::format("{}: {} episodes, {} aborted, logs {}", target, cfg.episodes, report.summary.aborted,
                      logs ? "well-formed" : why)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance gate"};
  fs::path work = fs::temp_directory_path() / "samalm_acceptance";
  app.add_option("--work-dir", work, "scratch directory for batch artifacts");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::err);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"fusion arithmetic", fusion_arithmetic},
      {"critic oracle equivalence", critic_oracle},
      {"re-query efficacy", requery_efficacy},
      {"loop boundedness", loop_boundedness},
      {"pipeline design target", pipeline_target},
      {"ablation direction", ablation_direction},
      {"determinism", [&] { return determinism(work); }},
      {"ORCA sanity", orca_sanity},
      {"live-mode smoke", [&] { return live_smoke(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, fmt::format("threw: {}", e.what())};
    }
    if (!v.pass) ++failed;
    fmt::print("[{}] criterion {}: {}: {}\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
