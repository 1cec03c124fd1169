#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "samalm/critics.hpp"
#include "samalm/fusion.hpp"
#include "samalm/gateway.hpp"
#include "samalm/scenario.hpp"

namespace samalm::harness {

enum class Mode { Decentralized, Centralized, NoCritic };
std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view s);

/// Weights of the social score terms: discomfort, path quality, timeliness.
struct SocialScoreWeights {
  double discomfort = 0.5;
  double path = 0.3;
  double timeliness = 0.2;
};

struct ExperimentConfig {
  sim::ScenarioConfig scenario;
  Mode mode = Mode::Decentralized;
  llm::BackendConfig backend;
  llm::ScriptedOptions scripted;
  int episodes = 50;
  std::uint64_t seed = 0;
  fusion::FusionParams fusion;
  critics::CriticParams critic;
  SocialScoreWeights social;
  bool llm_critics = true;
  int jobs = 1;
  std::filesystem::path out_dir;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Reads a config file; throws std::runtime_error on IO or parse failure.
ExperimentConfig load_config(const std::filesystem::path& path);

enum class Outcome { Success, Collision, Timeout, Aborted };
std::string_view to_string(Outcome outcome);
Outcome outcome_from_string(std::string_view s);

struct EpisodeResult {
  int episode = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Timeout;
  int steps = 0;
  double end_time = 0.0;
  std::vector<double> nav_times;       // per robot, arrival time or episode end
  std::vector<double> path_lengths;    // per robot, m
  std::vector<double> straight_lines;  // per robot, start to goal, m
  double t_m_mean = 0.0;
  int discomfort_steps = 0;
  int robot_steps = 0;
  int requery_count = 0;
  int forced_count = 0;
  int robot_robot_collisions = 0;
  int robot_human_collisions = 0;
  std::string abort_reason;

  double nav_time_mean() const;
  double path_length_total() const;
  double straight_line_total() const;
};

struct EpisodeLogs {
  std::vector<nlohmann::json> trajectory;
  std::vector<nlohmann::json> rounds;
};

struct EpisodeRun {
  EpisodeResult result;
  EpisodeLogs logs;
};

/// Runs one episode to completion. Backend failures end the episode as Aborted.
EpisodeRun run_episode(const ExperimentConfig& config, int episode_index, std::uint64_t episode_seed,
                       llm::Gateway& gateway);

std::uint64_t episode_seed(std::uint64_t master_seed, int episode_index);

/// Score of one episode on a 0-100 scale; 0 unless the episode succeeded.
double episode_social_score(Outcome outcome, int discomfort_steps, int robot_steps, double straight_line_total,
                            double path_length_total, double t_m_mean, double nav_time_mean,
                            const SocialScoreWeights& w);
double episode_social_score(const EpisodeResult& r, const SocialScoreWeights& w);

struct Summary {
  int episodes = 0;
  int successes = 0;
  int aborted = 0;
  int denominator = 0;  // aborted episodes drop out only when they reach 10% of the batch
  double sr = 0.0;      // percent
  int ss = 0;           // rounded mean
  int robot_robot_collisions = 0;
};

Summary summarize(const std::vector<EpisodeResult>& results, const SocialScoreWeights& w);
double social_score(const std::vector<EpisodeResult>& results, const SocialScoreWeights& w);

struct MetricsReport {
  std::vector<EpisodeResult> episodes;
  Summary summary;
  nlohmann::json config;
};

/// Runs every episode with seeds derived from the master seed and writes the
/// artifacts to config.out_dir when it is set.
MetricsReport run_batch(const ExperimentConfig& config);

inline constexpr std::string_view kMetricsFile = "metrics.csv";
std::string metrics_csv(const MetricsReport& report);
std::string episode_file_name(int episode_index);

/// Writes metrics.csv, config.json and the per-episode trajectory and round logs.
void export_report(const MetricsReport& report, const std::vector<EpisodeLogs>& logs,
                   const std::filesystem::path& out_dir);

}  // namespace samalm::harness
