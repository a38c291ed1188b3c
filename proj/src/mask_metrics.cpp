#include "lesionbench/mask_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lesionbench/errors.hpp"
#include "lesionbench/numeric.hpp"

namespace lesionbench {

namespace {

// Nearest multiple of 0.05 expressed in integer steps; ties away from zero.
long long round05_steps(double x) { return std::llround(x * 20.0); }

std::string join_ids(const std::vector<std::string>& ids, std::size_t limit = 10) {
  std::ostringstream os;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
    if (i) os << ", ";
    os << ids[i];
  }
  if (ids.size() > limit) os << ", ... (" << ids.size() << " total)";
  return os.str();
}

}  // namespace

PixelCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    std::ostringstream os;
    os << "mask shapes differ: prediction " << pred.width << "x" << pred.height
       << " vs ground truth " << gt.width << "x" << gt.height;
    throw BenchError(errc::kDimensionMismatch, os.str());
  }
  PixelCounts c;
  const std::size_t n = pred.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const bool p = pred.bits[i] != 0;
    const bool g = gt.bits[i] != 0;
    if (p && g)
      ++c.tp;
    else if (p && !g)
      ++c.fp;
    else if (!p && g)
      ++c.fn_;
    else
      ++c.tn;
  }
  return c;
}

double jaccard(const PixelCounts& counts) {
  const std::uint64_t denom = counts.tp + counts.fp + counts.fn_;
  if (denom == 0) return 1.0;  // both masks empty: agreement on absence
  return static_cast<double>(counts.tp) / static_cast<double>(denom);
}

double thresholded_jaccard(double j, double threshold) {
  if (!(j >= 0.0 && j <= 1.0)) {
    throw BenchError(errc::kDomainError,
                     "jaccard value outside [0, 1]: " + std::to_string(j));
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw BenchError(errc::kDomainError,
                     "threshold outside (0, 1): " + std::to_string(threshold));
  }
  return j < threshold ? 0.0 : j;
}

ThresholdDerivation derive_threshold(
    const std::vector<double>& interobserver_jaccards) {
  if (interobserver_jaccards.size() < 2) {
    throw BenchError(errc::kInsufficientData,
                     "threshold derivation needs at least 2 interobserver "
                     "values, got " +
                         std::to_string(interobserver_jaccards.size()));
  }
  for (double v : interobserver_jaccards) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw BenchError(errc::kDomainError,
                       "interobserver value outside [0, 1]: " + std::to_string(v));
    }
  }
  const auto [mn, mx] = std::minmax_element(interobserver_jaccards.begin(),
                                            interobserver_jaccards.end());
  ThresholdDerivation d;
  d.mean = compensated_mean(interobserver_jaccards);
  d.range = *mx - *mn;
  const long long steps = round05_steps(*mn) - round05_steps(d.range);
  d.threshold = static_cast<double>(steps) / 20.0;
  return d;
}

namespace {

StratumSummary summarize(const std::vector<const SegImageScore*>& scores) {
  StratumSummary s;
  s.n = scores.size();
  std::vector<double> j, tj;
  j.reserve(scores.size());
  tj.reserve(scores.size());
  std::size_t failed = 0;
  for (const SegImageScore* sc : scores) {
    j.push_back(sc->jaccard);
    tj.push_back(sc->thresholded_jaccard);
    if (sc->failed) ++failed;
  }
  s.mean_jaccard = compensated_mean(j);
  s.mean_thresholded_jaccard = compensated_mean(tj);
  s.failure_rate = scores.empty()
                       ? 0.0
                       : static_cast<double>(failed) / static_cast<double>(scores.size());
  return s;
}

}  // namespace

SegReport score_segmentation(
    const DatasetManifest& manifest,
    const std::map<std::string, BinaryMask>& ground_truth,
    const std::map<std::string, BinaryMask>& predictions, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw BenchError(errc::kDomainError,
                     "threshold outside (0, 1): " + std::to_string(threshold));
  }

  std::vector<std::string> missing;
  for (const auto& entry : manifest.entries) {
    if (!predictions.count(entry.image_id)) missing.push_back(entry.image_id);
  }
  if (!missing.empty()) {
    throw BenchError(errc::kMissingPrediction,
                     "no prediction for image(s): " + join_ids(missing));
  }

  SegReport report;
  report.threshold = threshold;
  report.n_images = manifest.size();
  report.per_image.reserve(manifest.size());

  // Ascending image_id order fixes every mean below.
  const auto entries = manifest.sorted_entries();
  for (const ManifestEntry* entry : entries) {
    auto git = ground_truth.find(entry->image_id);
    if (git == ground_truth.end()) {
      throw BenchError(errc::kMissingPrediction,
                       "no ground-truth mask for image: " + entry->image_id);
    }
    SegImageScore sc;
    sc.image_id = entry->image_id;
    try {
      sc.counts = confusion_counts(predictions.at(entry->image_id), git->second);
    } catch (const BenchError& e) {
      throw BenchError(e.code(), std::string(e.what()) + " (image " +
                                     entry->image_id + ")");
    }
    sc.both_empty = (sc.counts.tp + sc.counts.fp + sc.counts.fn_) == 0;
    sc.jaccard = jaccard(sc.counts);
    sc.failed = sc.jaccard < threshold;
    sc.thresholded_jaccard = sc.failed ? 0.0 : sc.jaccard;
    if (sc.both_empty) report.flags.push_back({"BothEmpty", entry->image_id});
    report.per_image.push_back(std::move(sc));
  }

  std::vector<const SegImageScore*> all;
  std::map<SegStratum, std::vector<const SegImageScore*>> by_stratum;
  all.reserve(report.per_image.size());
  for (std::size_t i = 0; i < report.per_image.size(); ++i) {
    all.push_back(&report.per_image[i]);
    by_stratum[entries[i]->stratum].push_back(&report.per_image[i]);
  }
  const StratumSummary overall = summarize(all);
  report.mean_jaccard = overall.mean_jaccard;
  report.mean_thresholded_jaccard = overall.mean_thresholded_jaccard;
  report.failure_rate = overall.failure_rate;
  for (const auto& [stratum, scores] : by_stratum) {
    report.per_stratum[stratum] = summarize(scores);
  }

  // Hard report invariants: TJ <= J and F in [0, 1], overall and per stratum.
  const auto check = [](const char* where, double tj, double j, double f) {
    if (!(tj <= j) || !(f >= 0.0 && f <= 1.0)) {
      throw std::logic_error(std::string("segmentation report invariant "
                                         "violated in ") + where);
    }
  };
  check("overall", report.mean_thresholded_jaccard, report.mean_jaccard,
        report.failure_rate);
  for (const auto& [stratum, summary] : report.per_stratum) {
    check(to_string(stratum), summary.mean_thresholded_jaccard,
          summary.mean_jaccard, summary.failure_rate);
  }
  return report;
}

AttributeReport aggregate_attribute_jaccard(
    const DatasetManifest& manifest,
    const std::map<std::pair<std::string, std::string>, BinaryMask>&
        ground_truth,
    const std::map<std::pair<std::string, std::string>, BinaryMask>&
        predictions) {
  if (manifest.attribute_names.empty()) {
    throw BenchError(errc::kInsufficientData,
                     "attribute scoring needs at least one attribute name");
  }

  std::vector<std::string> missing;
  for (const auto& entry : manifest.entries) {
    for (const auto& attr : manifest.attribute_names) {
      if (!predictions.count({entry.image_id, attr})) {
        missing.push_back(entry.image_id + "/" + attr);
      }
    }
  }
  if (!missing.empty()) {
    throw BenchError(errc::kMissingPrediction,
                     "no prediction for image/attribute pair(s): " +
                         join_ids(missing));
  }

  AttributeReport report;
  std::vector<double> per_attr_values;
  for (const auto& attr : manifest.attribute_names) {
    PixelCounts totals;
    for (const auto& entry : manifest.entries) {
      const BinaryMask& pred = predictions.at({entry.image_id, attr});
      auto git = ground_truth.find({entry.image_id, attr});
      PixelCounts c;
      try {
        if (git != ground_truth.end()) {
          c = confusion_counts(pred, git->second);
        } else {
          // Absent ground truth is an all-background mask of the
          // prediction's shape: every predicted pixel is a false positive.
          c.fp = pred.foreground_count();
          c.tn = pred.pixel_count() - c.fp;
        }
      } catch (const BenchError& e) {
        throw BenchError(e.code(), std::string(e.what()) + " (image " +
                                       entry.image_id + ", attribute " + attr +
                                       ")");
      }
      totals += c;
    }
    double j;
    if (totals.tp + totals.fp + totals.fn_ == 0) {
      j = 1.0;
      report.flags.push_back({"AttributeAbsentEverywhere", attr});
    } else {
      j = jaccard(totals);
    }
    report.per_attribute.emplace_back(attr, j);
    per_attr_values.push_back(j);
  }
  report.mean_jaccard = compensated_mean(per_attr_values);
  return report;
}

}  // namespace lesionbench
