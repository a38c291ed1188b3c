#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lesionbench/report.hpp"

namespace lesionbench {

// Library-level command implementations behind the CLI. Each writes its
// outputs, returns what it wrote, and throws BenchError on validation
// failures (the CLI maps those to exit code 2). All outputs are
// deterministic: rerunning on identical inputs rewrites identical bytes.

struct ScoreOutput {
  ordered_json report;
  std::string report_path;
  std::string csv_path;
};

// Threshold precedence: explicit option > manifest sidecar value.
ScoreOutput cmd_score_seg(const std::string& manifest_path,
                          const std::string& submission_dir,
                          std::optional<double> threshold,
                          const std::string& out_path,
                          std::string submission_id = {});

ScoreOutput cmd_score_attr(const std::string& manifest_path,
                           const std::string& submission_dir,
                           const std::string& out_path,
                           std::string submission_id = {});

ScoreOutput cmd_score_cls(const std::string& manifest_path,
                          const std::string& csv_path,
                          const std::string& out_path,
                          std::string submission_id = {});

struct RankOutput {
  std::vector<std::string> written;
  Leaderboard leaderboard;
  std::optional<RankDivergence> divergence;
  std::optional<GapHistogram> gap_hist;
};

// Ranks score reports (paths or `*`/`?` glob patterns) under --metric,
// optionally emits the divergence against --compare-metric, and emits
// metric/gap histograms (the gap histogram only when every report carries
// per-partition values for the metric).
RankOutput cmd_rank(const std::vector<std::string>& report_patterns,
                    const std::string& metric_name,
                    const std::optional<std::string>& compare_metric,
                    double bin_width, const std::string& out_dir);

struct SynthOutput {
  std::vector<std::string> written;
};

// Generates a dataset plus submissions from a JSON config
// (docs/formats.md); everything cmd_score_* needs to run end to end.
SynthOutput cmd_synth(const std::string& config_path, const std::string& out_dir);

}  // namespace lesionbench
