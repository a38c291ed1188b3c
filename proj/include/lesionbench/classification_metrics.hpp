#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench {

// Rows = true class, columns = decided class, both in DiagnosisClass order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(int true_class) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

// One-vs-rest ROC. Points start at (0,0), end at (1,1), both coordinates
// non-decreasing; auc is their trapezoidal integral (equivalently the
// Mann-Whitney statistic with ties credited 0.5).
struct RocCurve {
  DiagnosisClass cls = DiagnosisClass::MEL;
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
  double auc = 0.0;
};

enum class Scope : int { ALL = 0, INTERNAL, EXTERNAL };

const char* to_string(Scope s);

struct ClsReport {
  Scope scope = Scope::ALL;
  double acc = 0.0;
  double bacc = 0.0;
  // nullopt = AUC undefined in this scope (no positives or no negatives);
  // reported as a flag, never as a number.
  std::array<std::optional<double>, kNumClasses> per_class_auc;
  std::optional<double> mean_auc;  // unweighted mean of the defined AUCs
  std::array<std::optional<RocCurve>, kNumClasses> roc;
  ConfusionMatrix confusion;
  std::vector<Flag> flags;
};

// Full Part 3 evaluation: the same computation on ALL and restricted to each
// partition, plus internal - external gaps per metric. A partition with no
// images yields nullopt and an EmptyPartition flag instead of a report.
struct ClsEvaluation {
  ClsReport all;
  std::optional<ClsReport> internal;
  std::optional<ClsReport> external;
  // metric name -> internal value - external value; only metrics defined in
  // both partitions appear.
  std::map<std::string, double> gaps;
  // image_id -> decision, ascending image_id (for the per-image CSV).
  std::vector<std::pair<std::string, DiagnosisClass>> decisions;
  std::vector<Flag> flags;  // decision-level flags (TieBroken, ...)
};

// Mutually exclusive decision: the class with the maximal probability; exact
// ties go to the earliest class in DiagnosisClass order (*tie_broken set).
// Throws InvalidProbability (naming the image id) on NaN/out-of-range.
DiagnosisClass argmax_decision(const PredictionRecord& record,
                               bool* tie_broken = nullptr);

// Tallies decisions against manifest labels, optionally restricted to one
// partition. Decisions must cover every manifest id in scope.
ConfusionMatrix confusion_matrix(
    const std::map<std::string, DiagnosisClass>& decisions,
    const DatasetManifest& manifest,
    std::optional<Partition> scope = std::nullopt);

// Mean recall over classes with support > 0; zero-support classes are
// excluded and flagged. Throws EmptyMatrix when every support is zero.
double balanced_accuracy(const ConfusionMatrix& cm,
                         std::vector<Flag>* flags = nullptr);

// trace / total. Throws EmptyMatrix when the matrix is empty.
double accuracy(const ConfusionMatrix& cm);

// ROC from (score, is_positive) items by sweeping a threshold across the
// distinct score values descending; tied scores form a single sweep step.
// Throws DegenerateLabels when positives or negatives are absent.
RocCurve roc_auc(const std::vector<std::pair<double, bool>>& scored,
                 DiagnosisClass cls = DiagnosisClass::MEL);

// Scores one classification submission: reports for ALL / INTERNAL /
// EXTERNAL plus gaps. Predictions must cover the manifest exactly.
ClsEvaluation score_classification(const DatasetManifest& manifest,
                                   const std::vector<PredictionRecord>& predictions);

}  // namespace lesionbench
