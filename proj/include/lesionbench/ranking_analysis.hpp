#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench {

struct LeaderboardRow {
  int rank = 0;
  std::string submission_id;
  double value = 0.0;
};

// Rows sorted by value descending; equal values share a rank and the next
// distinct value's rank skips accordingly (competition ranking, 1,2,2,4).
// Row order among ties is submission_id ascending.
struct Leaderboard {
  std::string metric_name;
  std::vector<LeaderboardRow> rows;
};

struct RankPair {
  std::string submission_id;
  int rank_a = 0;
  int rank_b = 0;
};

// Scatter data for ranking one population under two metrics. spearman_rho is
// the tie-corrected Spearman coefficient (Pearson on midranks of the metric
// values); the pairs carry the leaderboards' competition ranks. When either
// metric has zero rank variance, rho is 1.0 if the midrank vectors are
// identical and 0.0 otherwise.
struct RankDivergence {
  std::string metric_a;
  std::string metric_b;
  std::vector<RankPair> pairs;  // submission_id ascending
  double spearman_rho = 0.0;
};

struct SlopeFit {
  std::string metric_name;
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n = 0;
};

// Fixed-width histogram of per-submission internal - external gaps. Bin k
// covers [k * bin_width, (k+1) * bin_width); counts[i] is the population of
// bin first_bin + i. stddev is the population standard deviation.
struct GapHistogram {
  std::string metric_name;
  double bin_width = 0.02;
  long long first_bin = 0;
  std::vector<std::uint64_t> counts;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

// Fixed-width histogram of arbitrary values (bin k covers
// [k*bin_width, (k+1)*bin_width)); the building block behind gap_histogram
// and the per-metric submission histograms in reports.
GapHistogram make_histogram(const std::vector<double>& values,
                            const std::string& metric_name, double bin_width);

// Throws UnknownMetric when any submission lacks the named aggregate.
Leaderboard build_leaderboard(const std::vector<SubmissionScore>& scores,
                              const std::string& metric_name);

RankDivergence rank_divergence(const std::vector<SubmissionScore>& scores,
                               const std::string& metric_a,
                               const std::string& metric_b);

// Ordinary least squares of each mask metric (y) on the failure rate (x)
// across submissions, for Jaccard and Thresholded Jaccard. Needs >= 2
// submissions with at least two distinct failure rates (DegenerateFit).
struct FailureSlopes {
  SlopeFit jaccard;
  SlopeFit thresholded_jaccard;
};
FailureSlopes failure_slope(const std::vector<SubmissionScore>& scores);

// Throws MissingPartitionScores when a submission lacks the metric in either
// partition; DomainError when bin_width <= 0.
GapHistogram gap_histogram(const std::vector<SubmissionScore>& scores,
                           const std::string& metric_name,
                           double bin_width = 0.02);

}  // namespace lesionbench
