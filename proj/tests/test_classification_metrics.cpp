#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lesionbench/classification_metrics.hpp"
#include "lesionbench/errors.hpp"
#include "lesionbench/numeric.hpp"
#include "lesionbench/prng.hpp"
#include "test_util.hpp"

using namespace lesionbench;

namespace {

PredictionRecord record(const std::string& id,
                        std::array<double, kNumClasses> probs) {
  PredictionRecord r;
  r.image_id = id;
  r.probs = probs;
  return r;
}

DatasetManifest cls_manifest(
    const std::vector<std::pair<std::string, DiagnosisClass>>& labels,
    const std::vector<Partition>& partitions = {}) {
  DatasetManifest m;
  m.task = Task::CLASSIFICATION;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ManifestEntry e;
    e.image_id = labels[i].first;
    e.label = labels[i].second;
    e.partition = partitions.empty() ? Partition::INTERNAL : partitions[i];
    m.entries.push_back(e);
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) {
              return a.image_id < b.image_id;
            });
  return m;
}

// O(n^2) Mann-Whitney oracle with half credit for ties.
double mann_whitney_oracle(const std::vector<std::pair<double, bool>>& scored) {
  double wins = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& [sp, p] : scored) {
    if (!p) continue;
    ++n_pos;
    for (const auto& [sn, nlab] : scored) {
      if (nlab) continue;
      if (sp > sn)
        wins += 1.0;
      else if (sp == sn)
        wins += 0.5;
    }
  }
  for (const auto& [s, p] : scored) n_neg += !p;
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

TEST_CASE("argmax decision: dominant entry, ties, validation") {
  CHECK(argmax_decision(record("a", {0.9, 0.02, 0.02, 0.02, 0.02, 0.01, 0.01})) ==
        DiagnosisClass::MEL);

  bool tie = false;
  const double u = 1.0 / 7;
  CHECK(argmax_decision(record("a", {u, u, u, u, u, u, u}), &tie) ==
        DiagnosisClass::MEL);
  CHECK(tie);

  tie = false;
  CHECK(argmax_decision(record("a", {0.1, 0.8, 0.1, 0.0, 0.0, 0.0, 0.0}), &tie) ==
        DiagnosisClass::NV);
  CHECK_FALSE(tie);  // ties below the maximum do not count

  CHECK_THROWS_WITH_AS(
      argmax_decision(record("img_7", {0.1, 1.2, 0, 0, 0, 0, 0})),
      doctest::Contains("img_7"), BenchError);
  CHECK_THROWS_AS(
      argmax_decision(record("a", {std::nan(""), 0, 0, 0, 0, 0, 0})),
      BenchError);
}

TEST_CASE("argmax decision matches a linear-scan oracle on random records") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    PredictionRecord r;
    r.image_id = "x";
    for (auto& p : r.probs) p = rng.next_double();
    if (trial % 5 == 0) r.probs[rng.next_below(7)] = r.probs[0];  // inject ties

    double best = -1.0;
    for (double p : r.probs) best = std::max(best, p);
    int oracle = 0;
    while (r.probs[oracle] != best) ++oracle;

    CHECK(argmax_decision(r) == static_cast<DiagnosisClass>(oracle));
  }
}

TEST_CASE("argmax decision is invariant under monotone transforms") {
  SplitMix64 rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    PredictionRecord r;
    r.image_id = "x";
    for (auto& p : r.probs) p = rng.next_double();
    PredictionRecord scaled = r;
    for (auto& p : scaled.probs) p = 0.5 * p + 0.25;
    CHECK(argmax_decision(r) == argmax_decision(scaled));
  }
}

TEST_CASE("confusion matrix tallies against manifest labels") {
  const auto manifest = cls_manifest({{"a", DiagnosisClass::NV},
                                      {"b", DiagnosisClass::MEL},
                                      {"c", DiagnosisClass::NV}});
  std::map<std::string, DiagnosisClass> decisions{
      {"a", DiagnosisClass::MEL},
      {"b", DiagnosisClass::MEL},
      {"c", DiagnosisClass::NV}};
  const ConfusionMatrix cm = confusion_matrix(decisions, manifest);
  CHECK(cm.counts[static_cast<int>(DiagnosisClass::NV)]
                 [static_cast<int>(DiagnosisClass::MEL)] == 1);
  CHECK(cm.counts[static_cast<int>(DiagnosisClass::NV)]
                 [static_cast<int>(DiagnosisClass::NV)] == 1);
  CHECK(cm.counts[static_cast<int>(DiagnosisClass::MEL)]
                 [static_cast<int>(DiagnosisClass::MEL)] == 1);
  CHECK(cm.total() == 3);
  CHECK(cm.row_sum(static_cast<int>(DiagnosisClass::NV)) == 2);

  std::map<std::string, DiagnosisClass> incomplete{{"a", DiagnosisClass::MEL}};
  CHECK_THROWS_AS(confusion_matrix(incomplete, manifest), BenchError);
}

TEST_CASE("confusion matrix matches an independent tally on random sets") {
  SplitMix64 rng(4242);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<std::string, DiagnosisClass>> labels;
    const int n = 1 + static_cast<int>(rng.next_below(50));
    for (int i = 0; i < n; ++i) {
      labels.emplace_back("img_" + std::to_string(100 + i),
                          static_cast<DiagnosisClass>(rng.next_below(7)));
    }
    const auto manifest = cls_manifest(labels);
    std::map<std::string, DiagnosisClass> decisions;
    std::uint64_t tally[kNumClasses][kNumClasses] = {};
    for (const auto& e : manifest.entries) {
      const auto decided = static_cast<DiagnosisClass>(rng.next_below(7));
      decisions.emplace(e.image_id, decided);
      ++tally[static_cast<int>(e.label)][static_cast<int>(decided)];
    }
    const ConfusionMatrix cm = confusion_matrix(decisions, manifest);
    for (int t = 0; t < kNumClasses; ++t) {
      for (int d = 0; d < kNumClasses; ++d) {
        CHECK(cm.counts[t][d] == tally[t][d]);
      }
    }
    CHECK(cm.total() == static_cast<std::uint64_t>(n));
  }
}

TEST_CASE("balanced accuracy and accuracy on the 2-class reduction") {
  // [[3,1],[2,4]] embedded in the 7x7 grid.
  ConfusionMatrix cm;
  cm.counts[0][0] = 3;
  cm.counts[0][1] = 1;
  cm.counts[1][0] = 2;
  cm.counts[1][1] = 4;

  std::vector<Flag> flags;
  const double bacc = balanced_accuracy(cm, &flags);
  CHECK(bacc == (3.0 / 4.0 + 4.0 / 6.0) / 2.0);
  CHECK(bacc == doctest::Approx(0.7083333333333333).epsilon(1e-15));
  CHECK(flags.size() == 5);  // the other five classes have zero support
  CHECK(flags[0].code == "ZeroSupportClass");

  CHECK(accuracy(cm) == 0.7);

  ConfusionMatrix perfect;
  for (int c = 0; c < kNumClasses; ++c) perfect.counts[c][c] = 3 + c;
  std::vector<Flag> none;
  CHECK(balanced_accuracy(perfect, &none) == 1.0);
  CHECK(none.empty());
  CHECK(accuracy(perfect) == 1.0);

  ConfusionMatrix all_wrong;
  all_wrong.counts[0][1] = 5;
  CHECK(accuracy(all_wrong) == 0.0);

  ConfusionMatrix empty;
  CHECK_THROWS_AS(balanced_accuracy(empty, nullptr), BenchError);
  CHECK_THROWS_AS(accuracy(empty), BenchError);
}

TEST_CASE("balanced accuracy is prevalence-invariant; accuracy is not") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    ConfusionMatrix cm;
    for (int t = 0; t < kNumClasses; ++t) {
      for (int d = 0; d < kNumClasses; ++d) {
        cm.counts[t][d] = rng.next_below(9);
      }
      cm.counts[t][t] += 1;  // every class keeps support
    }
    const int k = static_cast<int>(rng.next_below(kNumClasses));
    ConfusionMatrix dup = cm;
    for (int d = 0; d < kNumClasses; ++d) dup.counts[k][d] *= 5;

    CHECK(balanced_accuracy(dup, nullptr) == balanced_accuracy(cm, nullptr));

    // ACC moves exactly to the predicted value.
    const double predicted =
        static_cast<double>(cm.trace() + 4 * cm.counts[k][k]) /
        static_cast<double>(cm.total() + 4 * cm.row_sum(k));
    CHECK(accuracy(dup) == predicted);
  }
}

TEST_CASE("roc_auc: trivial separations and tie handling") {
  const RocCurve perfect = roc_auc(
      {{0.9, true}, {0.8, true}, {0.2, false}, {0.1, false}}, DiagnosisClass::NV);
  CHECK(perfect.auc == 1.0);
  CHECK(perfect.cls == DiagnosisClass::NV);
  CHECK(perfect.points.front() == std::pair{0.0, 0.0});
  CHECK(perfect.points.back() == std::pair{1.0, 1.0});

  const RocCurve tied = roc_auc({{0.5, true}, {0.5, false}, {0.5, true}});
  CHECK(tied.auc == 0.5);
  CHECK(tied.points.size() == 2);  // one sweep step for the single tie group

  CHECK_THROWS_AS(roc_auc({{0.5, true}, {0.7, true}}), BenchError);
  CHECK_THROWS_AS(roc_auc({{0.5, false}}), BenchError);
}

TEST_CASE("roc_auc matches the pairwise Mann-Whitney oracle") {
  SplitMix64 rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_below(299);
    std::vector<std::pair<double, bool>> scored;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Quantized scores inject plenty of ties.
      const double s = static_cast<double>(rng.next_below(16)) / 15.0;
      const bool pos = rng.next_bernoulli(0.4);
      has_pos |= pos;
      has_neg |= !pos;
      scored.emplace_back(s, pos);
    }
    if (!has_pos) scored.emplace_back(0.3, true);
    if (!has_neg) scored.emplace_back(0.6, false);

    const RocCurve curve = roc_auc(scored);
    CHECK(curve.auc == doctest::Approx(mann_whitney_oracle(scored)).epsilon(1e-12));

    // Curve invariants: monotone, anchored at the corners.
    CHECK(curve.points.front() == std::pair{0.0, 0.0});
    CHECK(curve.points.back() == std::pair{1.0, 1.0});
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      CHECK(curve.points[i].first >= curve.points[i - 1].first);
      CHECK(curve.points[i].second >= curve.points[i - 1].second);
    }

    // Trapezoidal integral of the emitted points reproduces auc.
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      area += (curve.points[i].first - curve.points[i - 1].first) *
              (curve.points[i].second + curve.points[i - 1].second) / 2.0;
    }
    CHECK(curve.auc == doctest::Approx(area).epsilon(1e-12));
  }
}

TEST_CASE("roc_auc is invariant under monotone transforms of scores") {
  SplitMix64 rng(99);
  std::vector<std::pair<double, bool>> scored;
  for (int i = 0; i < 100; ++i) {
    scored.emplace_back(static_cast<double>(rng.next_below(10)) / 9.0,
                        rng.next_bernoulli(0.5));
  }
  const double base = roc_auc(scored).auc;
  auto transformed = scored;
  for (auto& [s, p] : transformed) s = std::exp(2.0 * s) - 0.5;
  CHECK(roc_auc(transformed).auc == base);
}

TEST_CASE("score_classification: all-correct predictions") {
  const auto manifest = cls_manifest(
      {{"a", DiagnosisClass::MEL},
       {"b", DiagnosisClass::NV},
       {"c", DiagnosisClass::BCC},
       {"d", DiagnosisClass::MEL}},
      {Partition::INTERNAL, Partition::INTERNAL, Partition::EXTERNAL,
       Partition::EXTERNAL});
  std::vector<PredictionRecord> predictions;
  for (const auto& e : manifest.entries) {
    PredictionRecord r;
    r.image_id = e.image_id;
    r.probs.fill(0.0);
    r.probs[static_cast<int>(e.label)] = 1.0;
    predictions.push_back(r);
  }
  const ClsEvaluation eval = score_classification(manifest, predictions);
  CHECK(eval.all.acc == 1.0);
  CHECK(eval.all.bacc == 1.0);
  REQUIRE(eval.internal.has_value());
  REQUIRE(eval.external.has_value());
  CHECK(eval.internal->bacc == 1.0);
  CHECK(eval.external->bacc == 1.0);
  CHECK(eval.gaps.at(metric::kBalancedAccuracy) == 0.0);
  CHECK(eval.gaps.at(metric::kAccuracy) == 0.0);
  // Defined AUCs are all 1 and the gaps over shared classes are 0.
  for (const auto& [name, gap] : eval.gaps) CHECK(gap == 0.0);
  CHECK(eval.decisions.size() == 4);
}

TEST_CASE("score_classification: scope confusion matrices add up") {
  SplitMix64 rng(404);
  std::vector<std::pair<std::string, DiagnosisClass>> labels;
  std::vector<Partition> parts;
  for (int i = 0; i < 60; ++i) {
    labels.emplace_back("img_" + std::to_string(100 + i),
                        static_cast<DiagnosisClass>(rng.next_below(7)));
    parts.push_back(rng.next_bernoulli(0.3) ? Partition::EXTERNAL
                                            : Partition::INTERNAL);
  }
  const auto manifest = cls_manifest(labels, parts);
  std::vector<PredictionRecord> predictions;
  for (const auto& e : manifest.entries) {
    PredictionRecord r;
    r.image_id = e.image_id;
    for (auto& p : r.probs) p = rng.next_double();
    predictions.push_back(r);
  }
  const ClsEvaluation eval = score_classification(manifest, predictions);
  REQUIRE(eval.internal.has_value());
  REQUIRE(eval.external.has_value());
  ConfusionMatrix merged = eval.internal->confusion;
  merged += eval.external->confusion;
  CHECK(merged == eval.all.confusion);
}

TEST_CASE("score_classification: label-shuffled external partition") {
  // Internal predictions perfect; external decided uniformly at random:
  // EXTERNAL BACC lands near 1/7 and the bacc gap near INTERNAL - 1/7.
  SplitMix64 rng(515);
  std::vector<std::pair<std::string, DiagnosisClass>> labels;
  std::vector<Partition> parts;
  const int n = 2800;
  for (int i = 0; i < n; ++i) {
    labels.emplace_back("img_" + std::to_string(10000 + i),
                        static_cast<DiagnosisClass>(rng.next_below(7)));
    parts.push_back(i % 2 == 0 ? Partition::INTERNAL : Partition::EXTERNAL);
  }
  const auto manifest = cls_manifest(labels, parts);
  std::vector<PredictionRecord> predictions;
  for (const auto& e : manifest.entries) {
    PredictionRecord r;
    r.image_id = e.image_id;
    r.probs.fill(0.0);
    if (e.partition == Partition::INTERNAL) {
      r.probs[static_cast<int>(e.label)] = 1.0;
    } else {
      r.probs[rng.next_below(7)] = 1.0;
    }
    predictions.push_back(r);
  }
  const ClsEvaluation eval = score_classification(manifest, predictions);
  CHECK(eval.internal->bacc == 1.0);
  CHECK(eval.external->bacc == doctest::Approx(1.0 / 7).epsilon(0.35));
  CHECK(eval.gaps.at(metric::kBalancedAccuracy) ==
        doctest::Approx(1.0 - 1.0 / 7).epsilon(0.06));
}

TEST_CASE("score_classification: coverage validation") {
  const auto manifest = cls_manifest({{"a", DiagnosisClass::MEL},
                                      {"b", DiagnosisClass::NV}});
  std::vector<PredictionRecord> missing{
      record("a", {1, 0, 0, 0, 0, 0, 0})};
  CHECK_THROWS_WITH_AS(score_classification(manifest, missing),
                       doctest::Contains("b"), BenchError);

  std::vector<PredictionRecord> extra{record("a", {1, 0, 0, 0, 0, 0, 0}),
                                      record("b", {1, 0, 0, 0, 0, 0, 0}),
                                      record("z", {1, 0, 0, 0, 0, 0, 0})};
  CHECK_THROWS_WITH_AS(score_classification(manifest, extra),
                       doctest::Contains("z"), BenchError);

  std::vector<PredictionRecord> dup{record("a", {1, 0, 0, 0, 0, 0, 0}),
                                    record("a", {1, 0, 0, 0, 0, 0, 0}),
                                    record("b", {1, 0, 0, 0, 0, 0, 0})};
  CHECK_THROWS_AS(score_classification(manifest, dup), BenchError);
}

TEST_CASE("score_classification: degenerate class AUCs are flagged") {
  // No VASC images at all: its one-vs-rest AUC is undefined everywhere.
  const auto manifest = cls_manifest({{"a", DiagnosisClass::MEL},
                                      {"b", DiagnosisClass::NV},
                                      {"c", DiagnosisClass::MEL}});
  std::vector<PredictionRecord> predictions;
  for (const auto& e : manifest.entries) {
    PredictionRecord r;
    r.image_id = e.image_id;
    r.probs.fill(0.25);
    r.probs[static_cast<int>(e.label)] = 0.9;
    predictions.push_back(r);
  }
  const ClsEvaluation eval = score_classification(manifest, predictions);
  CHECK_FALSE(eval.all.per_class_auc[static_cast<int>(DiagnosisClass::VASC)]
                  .has_value());
  CHECK(eval.all.per_class_auc[static_cast<int>(DiagnosisClass::MEL)].has_value());
  REQUIRE(eval.all.mean_auc.has_value());
  const bool flagged =
      std::any_of(eval.all.flags.begin(), eval.all.flags.end(), [](const Flag& f) {
        return f.code == "DegenerateLabels" && f.context == "ALL:VASC";
      });
  CHECK(flagged);
  const bool subset_flagged =
      std::any_of(eval.all.flags.begin(), eval.all.flags.end(), [](const Flag& f) {
        return f.code == "MeanAucOverSubset";
      });
  CHECK(subset_flagged);
  // mean_auc averages only the defined AUCs (MEL and NV here).
  const double mel = *eval.all.per_class_auc[0];
  const double nv = *eval.all.per_class_auc[1];
  CHECK(*eval.all.mean_auc == (mel + nv) / 2.0);
}

TEST_CASE("mean auc equals the mean of the per-class aucs in every scope") {
  SplitMix64 rng(717);
  std::vector<std::pair<std::string, DiagnosisClass>> labels;
  std::vector<Partition> parts;
  for (int i = 0; i < 350; ++i) {
    labels.emplace_back("img_" + std::to_string(1000 + i),
                        static_cast<DiagnosisClass>(rng.next_below(7)));
    parts.push_back(i % 3 == 0 ? Partition::EXTERNAL : Partition::INTERNAL);
  }
  const auto manifest = cls_manifest(labels, parts);
  std::vector<PredictionRecord> predictions;
  for (const auto& e : manifest.entries) {
    PredictionRecord r;
    r.image_id = e.image_id;
    for (auto& p : r.probs) p = rng.next_double();
    r.probs[static_cast<int>(e.label)] =
        std::min(1.0, r.probs[static_cast<int>(e.label)] + 0.3);
    predictions.push_back(r);
  }
  const ClsEvaluation eval = score_classification(manifest, predictions);
  for (const ClsReport* report :
       {&eval.all, &*eval.internal, &*eval.external}) {
    std::vector<double> defined;
    for (int c = 0; c < kNumClasses; ++c) {
      if (report->per_class_auc[c]) defined.push_back(*report->per_class_auc[c]);
    }
    REQUIRE(report->mean_auc.has_value());
    CompensatedSum sum;
    for (double v : defined) sum.add(v);
    CHECK(*report->mean_auc == sum.value() / static_cast<double>(defined.size()));
  }
}

TEST_CASE("reruns produce identical evaluations") {
  SplitMix64 rng(616);
  std::vector<std::pair<std::string, DiagnosisClass>> labels;
  std::vector<Partition> parts;
  for (int i = 0; i < 40; ++i) {
    labels.emplace_back("img_" + std::to_string(i),
                        static_cast<DiagnosisClass>(rng.next_below(7)));
    parts.push_back(rng.next_bernoulli(0.5) ? Partition::EXTERNAL
                                            : Partition::INTERNAL);
  }
  const auto manifest = cls_manifest(labels, parts);
  std::vector<PredictionRecord> predictions;
  for (const auto& e : manifest.entries) {
    PredictionRecord r;
    r.image_id = e.image_id;
    for (auto& p : r.probs) p = rng.next_double();
    predictions.push_back(r);
  }
  const ClsEvaluation a = score_classification(manifest, predictions);
  const ClsEvaluation b = score_classification(manifest, predictions);
  CHECK(a.all.bacc == b.all.bacc);
  CHECK(a.all.acc == b.all.acc);
  CHECK(a.all.confusion == b.all.confusion);
  CHECK(a.gaps == b.gaps);
  for (int c = 0; c < kNumClasses; ++c) {
    CHECK(a.all.per_class_auc[c] == b.all.per_class_auc[c]);
  }
}
