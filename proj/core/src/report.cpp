#include "samalm/report.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace samalm::harness {
namespace {

constexpr std::size_t kColumns = 18;

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

template <typename T>
T number(std::string_view cell, int line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw std::runtime_error(fmt::format("metrics.csv line {}: bad number '{}'", line_no, cell));
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ParsedMetrics parse_metrics_csv(std::string_view text) {
  ParsedMetrics out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (!line.starts_with("episode,")) throw std::runtime_error("metrics.csv: missing header");
      continue;
    }
    const auto c = split(line);
    if (c.size() != kColumns) {
      throw std::runtime_error(fmt::format("metrics.csv line {}: expected {} columns", line_no, kColumns));
    }
    if (c[0] == "summary") {
      out.has_summary = true;
      out.robot_robot_collisions = number<int>(c[13], line_no);
      out.sr = number<double>(c[16], line_no);
      out.ss = number<int>(c[17], line_no);
      continue;
    }
    EpisodeResult r;
    r.episode = number<int>(c[0], line_no);
    r.seed = number<std::uint64_t>(c[1], line_no);
    r.outcome = outcome_from_string(c[2]);
    r.steps = number<int>(c[3], line_no);
    r.end_time = number<double>(c[4], line_no);
    r.nav_times = {number<double>(c[5], line_no)};
    r.path_lengths = {number<double>(c[6], line_no)};
    r.straight_lines = {number<double>(c[7], line_no)};
    r.t_m_mean = number<double>(c[8], line_no);
    r.discomfort_steps = number<int>(c[9], line_no);
    r.robot_steps = number<int>(c[10], line_no);
    r.requery_count = number<int>(c[11], line_no);
    r.forced_count = number<int>(c[12], line_no);
    r.robot_robot_collisions = number<int>(c[13], line_no);
    r.robot_human_collisions = number<int>(c[14], line_no);
    out.social_scores.push_back(number<double>(c[15], line_no));
    out.episodes.push_back(std::move(r));
  }
  return out;
}

Recomputed recompute_report(const std::filesystem::path& dir) {
  Recomputed out;
  out.file = parse_metrics_csv(read_file(dir / std::string(kMetricsFile)));

  SocialScoreWeights w;
  const auto config_path = dir / "config.json";
  if (std::filesystem::exists(config_path)) {
    const auto j = nlohmann::json::parse(read_file(config_path));
    if (j.contains("social")) {
      w.discomfort = j["social"].value("discomfort", w.discomfort);
      w.path = j["social"].value("path", w.path);
      w.timeliness = j["social"].value("timeliness", w.timeliness);
    }
  }

  out.summary = summarize(out.file.episodes, w);
  if (out.file.episodes.empty()) {
    out.matches = !out.file.has_summary;
    out.detail = "no episodes";
    return out;
  }
  if (!out.file.has_summary) {
    out.detail = "summary row missing";
    return out;
  }
  out.matches = out.summary.sr == out.file.sr && out.summary.ss == out.file.ss &&
                out.summary.robot_robot_collisions == out.file.robot_robot_collisions;
  out.detail = fmt::format("recomputed sr={} ss={}; file sr={} ss={}", out.summary.sr, out.summary.ss, out.file.sr,
                           out.file.ss);
  return out;
}

}  // namespace samalm::harness
