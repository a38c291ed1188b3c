#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench {

// One image's segmentation result. Invariants: failed <=> jaccard < T;
// failed => thresholded_jaccard == 0; otherwise thresholded_jaccard == jaccard.
struct SegImageScore {
  std::string image_id;
  PixelCounts counts;
  double jaccard = 0.0;
  double thresholded_jaccard = 0.0;
  bool failed = false;
  bool both_empty = false;
};

// F / TJ / J / n for one stratum (or the whole set).
struct StratumSummary {
  double failure_rate = 0.0;
  double mean_thresholded_jaccard = 0.0;
  double mean_jaccard = 0.0;
  std::size_t n = 0;
};

struct SegReport {
  double threshold = 0.65;
  std::size_t n_images = 0;
  double mean_jaccard = 0.0;
  double mean_thresholded_jaccard = 0.0;
  double failure_rate = 0.0;
  std::map<SegStratum, StratumSummary> per_stratum;  // only non-empty strata
  std::vector<SegImageScore> per_image;              // ascending image_id
  std::vector<Flag> flags;
};

struct ThresholdDerivation {
  double threshold = 0.0;
  double mean = 0.0;
  double range = 0.0;
};

struct AttributeReport {
  // (attribute name, dataset-aggregated Jaccard), in manifest attribute order.
  std::vector<std::pair<std::string, double>> per_attribute;
  double mean_jaccard = 0.0;
  std::vector<Flag> flags;
};

// Pixel confusion between a prediction and a ground-truth mask of identical
// shape. Throws DimensionMismatch otherwise.
PixelCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt);

// tp / (tp + fp + fn). Both masks empty (denominator 0) is defined as 1.0;
// the caller records a BothEmpty flag.
double jaccard(const PixelCounts& counts);

// 0 when j < threshold, else j unchanged; equality passes. Preconditions
// 0 <= j <= 1 and 0 < threshold < 1 enforced (DomainError).
double thresholded_jaccard(double j, double threshold);

// T = round05(min) - round05(max - min), where round05 rounds to the nearest
// multiple of 0.05 with ties away from zero. Also reports the mean and range
// of the interobserver values. Needs >= 2 values, each in [0, 1].
ThresholdDerivation derive_threshold(
    const std::vector<double>& interobserver_jaccards);

// Scores one segmentation submission against the manifest. Ground truth and
// predictions are passed in-memory (I/O lives in dataset_io). Per-image
// scores are independent; every mean runs over ascending image_id order.
SegReport score_segmentation(
    const DatasetManifest& manifest,
    const std::map<std::string, BinaryMask>& ground_truth,
    const std::map<std::string, BinaryMask>& predictions, double threshold);

// Part 2 scoring: per attribute, Jaccard of the TP/FP/FN totals summed over
// the entire dataset, then the unweighted mean over attributes. A ground
// truth absent from the map is an all-background mask of the prediction's
// shape. An attribute with dataset-wide TP+FP+FN == 0 scores 1.0 and raises
// an AttributeAbsentEverywhere flag.
AttributeReport aggregate_attribute_jaccard(
    const DatasetManifest& manifest,
    const std::map<std::pair<std::string, std::string>, BinaryMask>&
        ground_truth,
    const std::map<std::pair<std::string, std::string>, BinaryMask>&
        predictions);

}  // namespace lesionbench
