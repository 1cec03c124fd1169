#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "samalm/harness.hpp"

namespace samalm::harness {

/// Per-episode rows and the summary row as read back from metrics.csv.
struct ParsedMetrics {
  std::vector<EpisodeResult> episodes;  // per-robot vectors collapse to single totals
  std::vector<double> social_scores;    // per-episode column
  bool has_summary = false;
  double sr = 0.0;
  int ss = 0;
  int robot_robot_collisions = 0;
};

/// Throws std::runtime_error on malformed input.
ParsedMetrics parse_metrics_csv(std::string_view text);

struct Recomputed {
  Summary summary;      // recomputed from the per-episode rows
  ParsedMetrics file;   // as read
  bool matches = false; // summary row equals the recomputation
  std::string detail;
};

/// Recomputes SR and SS from the per-episode rows of <dir>/metrics.csv
/// using the social weights from <dir>/config.json when present.
Recomputed recompute_report(const std::filesystem::path& dir);

}  // namespace samalm::harness
