#include "lesionbench/classification_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lesionbench/errors.hpp"
#include "lesionbench/numeric.hpp"

namespace lesionbench {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (std::uint64_t c : row) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int i = 0; i < kNumClasses; ++i) t += counts[i][i];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int true_class) const {
  std::uint64_t t = 0;
  for (std::uint64_t c : counts[true_class]) t += c;
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  for (int i = 0; i < kNumClasses; ++i)
    for (int j = 0; j < kNumClasses; ++j) counts[i][j] += o.counts[i][j];
  return *this;
}

const char* to_string(Scope s) {
  switch (s) {
    case Scope::ALL: return "ALL";
    case Scope::INTERNAL: return "INTERNAL";
    case Scope::EXTERNAL: return "EXTERNAL";
  }
  return "unknown";
}

DiagnosisClass argmax_decision(const PredictionRecord& record, bool* tie_broken) {
  for (int i = 0; i < kNumClasses; ++i) {
    const double p = record.probs[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      std::ostringstream os;
      os << "invalid probability for image " << record.image_id << ", class "
         << kClassNames[i] << ": " << p;
      throw BenchError(errc::kInvalidProbability, os.str());
    }
  }
  int best = 0;
  bool tie = false;
  for (int i = 1; i < kNumClasses; ++i) {
    if (record.probs[i] > record.probs[best]) {
      best = i;
      tie = false;
    } else if (record.probs[i] == record.probs[best]) {
      tie = true;  // an equal later class never displaces the earlier one
    }
  }
  if (tie_broken) *tie_broken = tie;
  return static_cast<DiagnosisClass>(best);
}

ConfusionMatrix confusion_matrix(
    const std::map<std::string, DiagnosisClass>& decisions,
    const DatasetManifest& manifest, std::optional<Partition> scope) {
  ConfusionMatrix cm;
  std::vector<std::string> missing;
  for (const auto& entry : manifest.entries) {
    if (scope && entry.partition != *scope) continue;
    auto it = decisions.find(entry.image_id);
    if (it == decisions.end()) {
      missing.push_back(entry.image_id);
      continue;
    }
    ++cm.counts[static_cast<int>(entry.label)][static_cast<int>(it->second)];
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "no decision for " << missing.size() << " image(s), first: "
       << missing.front();
    throw BenchError(errc::kMissingPrediction, os.str());
  }
  return cm;
}

double balanced_accuracy(const ConfusionMatrix& cm, std::vector<Flag>* flags) {
  std::vector<double> recalls;
  for (int t = 0; t < kNumClasses; ++t) {
    const std::uint64_t support = cm.row_sum(t);
    if (support == 0) {
      if (flags) flags->push_back({"ZeroSupportClass", kClassNames[t]});
      continue;
    }
    recalls.push_back(static_cast<double>(cm.counts[t][t]) /
                      static_cast<double>(support));
  }
  if (recalls.empty()) {
    throw BenchError(errc::kEmptyMatrix,
                     "balanced accuracy undefined: every class support is zero");
  }
  return compensated_mean(recalls);
}

double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) {
    throw BenchError(errc::kEmptyMatrix, "accuracy undefined: empty matrix");
  }
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

RocCurve roc_auc(const std::vector<std::pair<double, bool>>& scored,
                 DiagnosisClass cls) {
  std::uint64_t n_pos = 0, n_neg = 0;
  for (const auto& [score, positive] : scored) {
    if (!std::isfinite(score)) {
      throw BenchError(errc::kDomainError,
                       "non-finite score in ROC input: " + std::to_string(score));
    }
    (positive ? n_pos : n_neg) += 1;
  }
  if (n_pos == 0 || n_neg == 0) {
    std::ostringstream os;
    os << "ROC undefined for class " << to_string(cls) << ": " << n_pos
       << " positives, " << n_neg << " negatives";
    throw BenchError(errc::kDegenerateLabels, os.str());
  }

  // Group tied scores into single sweep steps.
  std::vector<std::pair<double, bool>> sorted = scored;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.cls = cls;
  curve.points.emplace_back(0.0, 0.0);
  std::uint64_t cum_tp = 0, cum_fp = 0;
  CompensatedSum area;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    std::uint64_t group_tp = 0, group_fp = 0;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) {
      (sorted[j].second ? group_tp : group_fp) += 1;
      ++j;
    }
    cum_tp += group_tp;
    cum_fp += group_fp;
    const double fpr = static_cast<double>(cum_fp) / static_cast<double>(n_neg);
    const double tpr = static_cast<double>(cum_tp) / static_cast<double>(n_pos);
    area.add((fpr - prev_fpr) * (prev_tpr + tpr) * 0.5);
    curve.points.emplace_back(fpr, tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
    i = j;
  }
  curve.auc = area.value();
  return curve;
}

namespace {

ClsReport build_report(Scope scope, const DatasetManifest& manifest,
                       const std::map<std::string, DiagnosisClass>& decisions,
                       const std::vector<const PredictionRecord*>& in_scope) {
  ClsReport report;
  report.scope = scope;
  std::optional<Partition> filter;
  if (scope == Scope::INTERNAL) filter = Partition::INTERNAL;
  if (scope == Scope::EXTERNAL) filter = Partition::EXTERNAL;

  report.confusion = confusion_matrix(decisions, manifest, filter);
  report.acc = accuracy(report.confusion);
  report.bacc = balanced_accuracy(report.confusion, &report.flags);

  // One-vs-rest ROC per class from the raw confidences.
  std::vector<double> defined_aucs;
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(in_scope.size());
    for (const PredictionRecord* rec : in_scope) {
      const ManifestEntry* entry = manifest.find(rec->image_id);
      scored.emplace_back(rec->probs[c],
                          entry->label == static_cast<DiagnosisClass>(c));
    }
    try {
      RocCurve curve = roc_auc(scored, static_cast<DiagnosisClass>(c));
      report.per_class_auc[c] = curve.auc;
      defined_aucs.push_back(curve.auc);
      report.roc[c] = std::move(curve);
    } catch (const BenchError& e) {
      if (e.code() != errc::kDegenerateLabels) throw;
      report.flags.push_back(
          {"DegenerateLabels",
           std::string(to_string(scope)) + ":" + kClassNames[c]});
    }
  }
  if (!defined_aucs.empty()) {
    report.mean_auc = compensated_mean(defined_aucs);
    if (defined_aucs.size() != kNumClasses) {
      report.flags.push_back({"MeanAucOverSubset", to_string(scope)});
    }
  }
  return report;
}

}  // namespace

ClsEvaluation score_classification(const DatasetManifest& manifest,
                                   const std::vector<PredictionRecord>& predictions) {
  // Coverage check both ways: missing manifest ids and unknown extras.
  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& rec : predictions) {
    if (!by_id.emplace(rec.image_id, &rec).second) {
      throw BenchError(errc::kDuplicateImageId,
                       "duplicate prediction for image: " + rec.image_id);
    }
  }
  std::vector<std::string> missing;
  for (const auto& entry : manifest.entries) {
    if (!by_id.count(entry.image_id)) missing.push_back(entry.image_id);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << missing.size() << " manifest image(s) without predictions, first: "
       << missing.front();
    throw BenchError(errc::kMissingPrediction, os.str());
  }
  std::vector<std::string> extra;
  for (const auto& [id, rec] : by_id) {
    if (!manifest.find(id)) extra.push_back(id);
  }
  if (!extra.empty()) {
    std::ostringstream os;
    os << extra.size() << " prediction(s) for unknown image(s), first: "
       << extra.front();
    throw BenchError(errc::kExtraRows, os.str());
  }

  ClsEvaluation eval;
  std::map<std::string, DiagnosisClass> decisions;
  std::vector<const PredictionRecord*> all, internal, external;
  for (const ManifestEntry* entry : manifest.sorted_entries()) {
    const PredictionRecord* rec = by_id.at(entry->image_id);
    bool tie = false;
    const DiagnosisClass decided = argmax_decision(*rec, &tie);
    if (tie) eval.flags.push_back({"TieBroken", entry->image_id});
    decisions.emplace(entry->image_id, decided);
    eval.decisions.emplace_back(entry->image_id, decided);
    all.push_back(rec);
    (entry->partition == Partition::INTERNAL ? internal : external).push_back(rec);
  }

  eval.all = build_report(Scope::ALL, manifest, decisions, all);
  if (internal.empty()) {
    eval.flags.push_back({"EmptyPartition", "INTERNAL"});
  } else {
    eval.internal = build_report(Scope::INTERNAL, manifest, decisions, internal);
  }
  if (external.empty()) {
    eval.flags.push_back({"EmptyPartition", "EXTERNAL"});
  } else {
    eval.external = build_report(Scope::EXTERNAL, manifest, decisions, external);
  }

  if (eval.internal && eval.external) {
    eval.gaps[metric::kBalancedAccuracy] =
        eval.internal->bacc - eval.external->bacc;
    eval.gaps[metric::kAccuracy] = eval.internal->acc - eval.external->acc;
    if (eval.internal->mean_auc && eval.external->mean_auc) {
      eval.gaps[metric::kMeanAuc] =
          *eval.internal->mean_auc - *eval.external->mean_auc;
    }
    for (int c = 0; c < kNumClasses; ++c) {
      if (eval.internal->per_class_auc[c] && eval.external->per_class_auc[c]) {
        eval.gaps[metric::auc_for(static_cast<DiagnosisClass>(c))] =
            *eval.internal->per_class_auc[c] - *eval.external->per_class_auc[c];
      }
    }
  }
  return eval;
}

}  // namespace lesionbench
