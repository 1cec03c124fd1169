#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <optional>

#include "samalm/harness.hpp"
#include "samalm/report.hpp"

namespace fs = std::filesystem;
using samalm::harness::ExperimentConfig;

namespace {

ExperimentConfig base_config(const std::string& path) {
  ExperimentConfig c = path.empty() ? ExperimentConfig{} : samalm::harness::load_config(path);
  c.backend.apply_environment();
  return c;
}

int count_episode_files(const fs::path& dir) {
  int n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".jsonl") ++n;
  }
  return n;
}

int finish(const samalm::harness::MetricsReport& report) {
  const auto& s = report.summary;
  fmt::print("episodes={} successes={} aborted={} SR={} SS={} robot_robot_collisions={}\n", s.episodes, s.successes,
             s.aborted, s.sr, s.ss, s.robot_robot_collisions);
  if (!report.config.value("out_dir", std::string{}).empty()) {
    fmt::print("artifacts written to {}\n", report.config["out_dir"].get<std::string>());
  }
  return s.aborted > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot socially-aware navigation with LLM actors and critics"};
  app.require_subcommand(1);

  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Run a batch of episodes");
  std::string run_config, mode, backend, out_dir, fault, transcript;
  std::optional<int> episodes, jobs;
  std::optional<std::uint64_t> seed;
  std::optional<double> fault_probability;
  bool no_llm_critics = false;
  run->add_option("--config", run_config, "Experiment or scenario JSON")->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "decentralized|centralized|no-critic");
  run->add_option("--backend", backend, "scripted|replay|http");
  run->add_option("--episodes", episodes, "Number of episodes");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--jobs", jobs, "Episodes run concurrently");
  run->add_option("--fault", fault, "Scripted actor fault: none|unsafe_until_feedback|incorrigible|random_unsafe|garbage|idle");
  run->add_option("--fault-probability", fault_probability, "Probability for random_unsafe");
  run->add_option("--transcript", transcript, "Replay source (replay backend)");
  run->add_flag("--no-llm-critics", no_llm_critics, "Use template critic reasoning without querying the backend");

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run a recorded batch from its transcripts");
  std::string replay_transcript, replay_config, replay_out;
  replay->add_option("--transcript", replay_transcript, "Transcript file or directory")->required()->check(CLI::ExistingPath);
  replay->add_option("--config", replay_config, "Experiment JSON used for the recording")->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "Output directory");

  // report
  auto* report = app.add_subcommand("report", "Recompute metrics from an output directory");
  std::string report_in;
  report->add_option("--in", report_in, "Output directory of a run")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) {
      ExperimentConfig c = base_config(run_config);
      if (!mode.empty()) c.mode = samalm::harness::mode_from_string(mode);
      if (!backend.empty()) c.backend.mode = samalm::llm::backend_mode_from_string(backend);
      if (episodes) c.episodes = *episodes;
      if (seed) c.seed = *seed;
      if (jobs) c.jobs = *jobs;
      if (!out_dir.empty()) c.out_dir = out_dir;
      if (!fault.empty()) c.scripted.fault = samalm::llm::fault_mode_from_string(fault);
      if (fault_probability) c.scripted.fault_probability = *fault_probability;
      if (!transcript.empty()) c.backend.transcript_path = transcript;
      if (no_llm_critics) c.llm_critics = false;
      return finish(samalm::harness::run_batch(c));
    }
    if (*replay) {
      ExperimentConfig c = base_config(replay_config);
      const fs::path source = replay_transcript;
      c.backend.mode = samalm::llm::BackendMode::Replay;
      c.backend.transcript_path = source.string();
      if (fs::is_directory(source) && replay_config.empty()) c.episodes = std::max(1, count_episode_files(source));
      c.out_dir = replay_out;
      return finish(samalm::harness::run_batch(c));
    }
    if (*report) {
      const auto r = samalm::harness::recompute_report(report_in);
      fmt::print("episodes={} successes={} aborted={} SR={} SS={} robot_robot_collisions={}\n", r.summary.episodes,
                 r.summary.successes, r.summary.aborted, r.summary.sr, r.summary.ss,
                 r.summary.robot_robot_collisions);
      fmt::print("summary row {}: {}\n", r.matches ? "matches" : "DIFFERS", r.detail);
      return r.matches ? 0 : 3;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
