#include "lesionbench/ranking_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lesionbench/errors.hpp"
#include "lesionbench/numeric.hpp"

namespace lesionbench {

namespace {

double require_aggregate(const SubmissionScore& score, const std::string& metric) {
  auto it = score.aggregates.find(metric);
  if (it == score.aggregates.end()) {
    throw BenchError(errc::kUnknownMetric, "submission " + score.submission_id +
                                               " has no aggregate metric '" +
                                               metric + "'");
  }
  return it->second;
}

// Midranks (average rank of each tie group, 1-based) of values, for the
// tie-corrected Spearman coefficient.
std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
    i = j;
  }
  return ranks;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys,
               bool* degenerate) {
  const double mx = compensated_mean(xs);
  const double my = compensated_mean(ys);
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() == 0.0 || syy.value() == 0.0) {
    *degenerate = true;
    return 0.0;
  }
  *degenerate = false;
  return sxy.value() / std::sqrt(sxx.value() * syy.value());
}

}  // namespace

Leaderboard build_leaderboard(const std::vector<SubmissionScore>& scores,
                              const std::string& metric_name) {
  Leaderboard board;
  board.metric_name = metric_name;
  board.rows.reserve(scores.size());
  for (const auto& s : scores) {
    board.rows.push_back({0, s.submission_id, require_aggregate(s, metric_name)});
  }
  std::sort(board.rows.begin(), board.rows.end(),
            [](const LeaderboardRow& a, const LeaderboardRow& b) {
              if (a.value != b.value) return a.value > b.value;
              return a.submission_id < b.submission_id;
            });
  for (std::size_t i = 0; i < board.rows.size(); ++i) {
    if (i > 0 && board.rows[i].value == board.rows[i - 1].value) {
      board.rows[i].rank = board.rows[i - 1].rank;
    } else {
      board.rows[i].rank = static_cast<int>(i + 1);
    }
  }
  return board;
}

RankDivergence rank_divergence(const std::vector<SubmissionScore>& scores,
                               const std::string& metric_a,
                               const std::string& metric_b) {
  RankDivergence div;
  div.metric_a = metric_a;
  div.metric_b = metric_b;

  const Leaderboard board_a = build_leaderboard(scores, metric_a);
  const Leaderboard board_b = build_leaderboard(scores, metric_b);
  std::map<std::string, int> rank_a, rank_b;
  for (const auto& row : board_a.rows) rank_a[row.submission_id] = row.rank;
  for (const auto& row : board_b.rows) rank_b[row.submission_id] = row.rank;

  // One pair per submission, id ascending.
  std::vector<const SubmissionScore*> sorted;
  sorted.reserve(scores.size());
  for (const auto& s : scores) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const SubmissionScore* a, const SubmissionScore* b) {
              return a->submission_id < b->submission_id;
            });

  std::vector<double> va, vb;
  for (const SubmissionScore* s : sorted) {
    div.pairs.push_back({s->submission_id, rank_a.at(s->submission_id),
                         rank_b.at(s->submission_id)});
    va.push_back(require_aggregate(*s, metric_a));
    vb.push_back(require_aggregate(*s, metric_b));
  }

  const std::vector<double> ra = midranks(va);
  const std::vector<double> rb = midranks(vb);
  bool degenerate = false;
  div.spearman_rho = pearson(ra, rb, &degenerate);
  if (degenerate) div.spearman_rho = (ra == rb) ? 1.0 : 0.0;
  return div;
}

namespace {

SlopeFit fit_ols(const std::string& metric_name, const std::vector<double>& xs,
                 const std::vector<double>& ys) {
  const double mx = compensated_mean(xs);
  const double my = compensated_mean(ys);
  CompensatedSum sxy, sxx;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy.add((xs[i] - mx) * (ys[i] - my));
    sxx.add((xs[i] - mx) * (xs[i] - mx));
  }
  if (sxx.value() == 0.0) {
    throw BenchError(errc::kDegenerateFit,
                     "failure-rate regression undefined: all failure rates equal");
  }
  SlopeFit fit;
  fit.metric_name = metric_name;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  fit.n = xs.size();
  return fit;
}

}  // namespace

FailureSlopes failure_slope(const std::vector<SubmissionScore>& scores) {
  if (scores.size() < 2) {
    throw BenchError(errc::kInsufficientData,
                     "failure-rate regression needs >= 2 submissions, got " +
                         std::to_string(scores.size()));
  }
  std::vector<const SubmissionScore*> sorted;
  sorted.reserve(scores.size());
  for (const auto& s : scores) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const SubmissionScore* a, const SubmissionScore* b) {
              return a->submission_id < b->submission_id;
            });
  std::vector<double> f, j, tj;
  for (const SubmissionScore* s : sorted) {
    f.push_back(require_aggregate(*s, metric::kFailureRate));
    j.push_back(require_aggregate(*s, metric::kJaccard));
    tj.push_back(require_aggregate(*s, metric::kThresholdedJaccard));
  }
  FailureSlopes slopes;
  slopes.jaccard = fit_ols(metric::kJaccard, f, j);
  slopes.thresholded_jaccard = fit_ols(metric::kThresholdedJaccard, f, tj);
  return slopes;
}

GapHistogram make_histogram(const std::vector<double>& values,
                            const std::string& metric_name, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw BenchError(errc::kDomainError,
                     "bin width must be positive, got " + std::to_string(bin_width));
  }
  GapHistogram hist;
  hist.metric_name = metric_name;
  hist.bin_width = bin_width;
  hist.n = values.size();
  if (values.empty()) return hist;

  long long lo = 0, hi = 0;
  std::vector<long long> bins;
  bins.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const long long k = static_cast<long long>(std::floor(values[i] / bin_width));
    bins.push_back(k);
    if (i == 0 || k < lo) lo = k;
    if (i == 0 || k > hi) hi = k;
  }
  hist.first_bin = lo;
  hist.counts.assign(static_cast<std::size_t>(hi - lo + 1), 0);
  for (long long k : bins) ++hist.counts[static_cast<std::size_t>(k - lo)];

  hist.mean = compensated_mean(values);
  CompensatedSum var;
  for (double v : values) var.add((v - hist.mean) * (v - hist.mean));
  hist.stddev = std::sqrt(var.value() / static_cast<double>(values.size()));
  return hist;
}

GapHistogram gap_histogram(const std::vector<SubmissionScore>& scores,
                           const std::string& metric_name, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw BenchError(errc::kDomainError,
                     "bin width must be positive, got " + std::to_string(bin_width));
  }
  std::vector<const SubmissionScore*> sorted;
  sorted.reserve(scores.size());
  for (const auto& s : scores) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const SubmissionScore* a, const SubmissionScore* b) {
              return a->submission_id < b->submission_id;
            });

  std::vector<double> gaps;
  for (const SubmissionScore* s : sorted) {
    auto iit = s->per_partition.find(kPartitionNames[0]);
    auto eit = s->per_partition.find(kPartitionNames[1]);
    const double* iv = nullptr;
    const double* ev = nullptr;
    if (iit != s->per_partition.end()) {
      auto m = iit->second.find(metric_name);
      if (m != iit->second.end()) iv = &m->second;
    }
    if (eit != s->per_partition.end()) {
      auto m = eit->second.find(metric_name);
      if (m != eit->second.end()) ev = &m->second;
    }
    if (!iv || !ev) {
      throw BenchError(errc::kMissingPartitionScores,
                       "submission " + s->submission_id +
                           " lacks per-partition values for metric '" +
                           metric_name + "'");
    }
    gaps.push_back(*iv - *ev);
  }
  return make_histogram(gaps, metric_name, bin_width);
}

}  // namespace lesionbench
