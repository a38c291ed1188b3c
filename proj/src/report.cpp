#include "lesionbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lesionbench/errors.hpp"
#include "lesionbench/numeric.hpp"

namespace lesionbench {

ordered_json report_envelope(Task task, const std::string& manifest_digest,
                             const std::string& submission_id) {
  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["tool_version"] = kToolVersion;
  doc["task"] = to_string(task);
  doc["manifest_digest"] = manifest_digest;
  doc["submission_id"] = submission_id;
  return doc;
}

ordered_json flags_json(const std::vector<Flag>& flags) {
  ordered_json arr = ordered_json::array();
  for (const auto& f : flags) {
    ordered_json o;
    o["code"] = f.code;
    o["context"] = f.context;
    arr.push_back(std::move(o));
  }
  return arr;
}

ordered_json seg_results_json(const SegReport& report) {
  ordered_json results;
  results["threshold"] = report.threshold;
  results["n_images"] = report.n_images;
  ordered_json aggregates;
  aggregates[metric::kFailureRate] = report.failure_rate;
  aggregates[metric::kThresholdedJaccard] = report.mean_thresholded_jaccard;
  aggregates[metric::kJaccard] = report.mean_jaccard;
  results["aggregates"] = std::move(aggregates);
  ordered_json strata;
  for (int s = 0; s < kNumStrata; ++s) {
    auto it = report.per_stratum.find(static_cast<SegStratum>(s));
    if (it == report.per_stratum.end()) continue;
    ordered_json o;
    o[metric::kFailureRate] = it->second.failure_rate;
    o[metric::kThresholdedJaccard] = it->second.mean_thresholded_jaccard;
    o[metric::kJaccard] = it->second.mean_jaccard;
    o["n"] = it->second.n;
    strata[kStratumNames[s]] = std::move(o);
  }
  results["per_stratum"] = std::move(strata);
  return results;
}

ordered_json attr_results_json(const AttributeReport& report) {
  ordered_json results;
  ordered_json aggregates;
  aggregates[metric::kMeanAttributeJaccard] = report.mean_jaccard;
  results["aggregates"] = std::move(aggregates);
  ordered_json per_attr;
  for (const auto& [name, value] : report.per_attribute) per_attr[name] = value;
  results["per_attribute"] = std::move(per_attr);
  return results;
}

namespace {

ordered_json scope_json(const ClsReport& report, std::size_t n_images) {
  ordered_json o;
  o["n"] = n_images;
  o[metric::kBalancedAccuracy] = report.bacc;
  o[metric::kAccuracy] = report.acc;
  if (report.mean_auc) {
    o[metric::kMeanAuc] = *report.mean_auc;
  } else {
    o[metric::kMeanAuc] = nullptr;
  }
  ordered_json auc;
  for (int c = 0; c < kNumClasses; ++c) {
    if (report.per_class_auc[c]) {
      auc[kClassNames[c]] = *report.per_class_auc[c];
    } else {
      auc[kClassNames[c]] = nullptr;
    }
  }
  o["per_class_auc"] = std::move(auc);
  ordered_json confusion = ordered_json::array();
  for (int t = 0; t < kNumClasses; ++t) {
    ordered_json row = ordered_json::array();
    for (int d = 0; d < kNumClasses; ++d) {
      row.push_back(report.confusion.counts[t][d]);
    }
    confusion.push_back(std::move(row));
  }
  o["confusion"] = std::move(confusion);
  ordered_json roc;
  for (int c = 0; c < kNumClasses; ++c) {
    if (!report.roc[c]) {
      roc[kClassNames[c]] = nullptr;
      continue;
    }
    ordered_json points = ordered_json::array();
    for (const auto& [fpr, tpr] : report.roc[c]->points) {
      points.push_back(ordered_json::array({fpr, tpr}));
    }
    roc[kClassNames[c]] = std::move(points);
  }
  o["roc"] = std::move(roc);
  return o;
}

}  // namespace

ordered_json cls_results_json(const ClsEvaluation& eval) {
  ordered_json results;
  // Headline metric first.
  ordered_json aggregates;
  aggregates[metric::kBalancedAccuracy] = eval.all.bacc;
  aggregates[metric::kAccuracy] = eval.all.acc;
  if (eval.all.mean_auc) {
    aggregates[metric::kMeanAuc] = *eval.all.mean_auc;
  } else {
    aggregates[metric::kMeanAuc] = nullptr;
  }
  for (int c = 0; c < kNumClasses; ++c) {
    const std::string key = metric::auc_for(static_cast<DiagnosisClass>(c));
    if (eval.all.per_class_auc[c]) {
      aggregates[key] = *eval.all.per_class_auc[c];
    } else {
      aggregates[key] = nullptr;
    }
  }
  results["aggregates"] = std::move(aggregates);

  const std::size_t n_all = eval.all.confusion.total();
  ordered_json scopes;
  scopes["ALL"] = scope_json(eval.all, n_all);
  scopes["INTERNAL"] = eval.internal ? scope_json(*eval.internal,
                                                  eval.internal->confusion.total())
                                     : ordered_json(nullptr);
  scopes["EXTERNAL"] = eval.external ? scope_json(*eval.external,
                                                  eval.external->confusion.total())
                                     : ordered_json(nullptr);
  results["scopes"] = std::move(scopes);

  ordered_json gaps;
  // Fixed emission order: bacc, acc, mean_auc, then per-class AUCs.
  for (const char* name : {metric::kBalancedAccuracy, metric::kAccuracy,
                           metric::kMeanAuc}) {
    auto it = eval.gaps.find(name);
    if (it != eval.gaps.end()) gaps[name] = it->second;
  }
  for (int c = 0; c < kNumClasses; ++c) {
    auto it = eval.gaps.find(metric::auc_for(static_cast<DiagnosisClass>(c)));
    if (it != eval.gaps.end()) gaps[it->first] = it->second;
  }
  results["gaps"] = std::move(gaps);
  return results;
}

ordered_json leaderboard_json(const Leaderboard& board) {
  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["tool_version"] = kToolVersion;
  doc["metric"] = board.metric_name;
  ordered_json rows = ordered_json::array();
  for (const auto& row : board.rows) {
    ordered_json o;
    o["rank"] = row.rank;
    o["submission_id"] = row.submission_id;
    o["value"] = row.value;
    rows.push_back(std::move(o));
  }
  doc["rows"] = std::move(rows);
  return doc;
}

ordered_json divergence_json(const RankDivergence& divergence) {
  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["tool_version"] = kToolVersion;
  doc["metric_a"] = divergence.metric_a;
  doc["metric_b"] = divergence.metric_b;
  doc["spearman_rho"] = divergence.spearman_rho;
  ordered_json pairs = ordered_json::array();
  for (const auto& p : divergence.pairs) {
    ordered_json o;
    o["submission_id"] = p.submission_id;
    o["rank_a"] = p.rank_a;
    o["rank_b"] = p.rank_b;
    pairs.push_back(std::move(o));
  }
  doc["pairs"] = std::move(pairs);
  return doc;
}

ordered_json histogram_json(const GapHistogram& hist) {
  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["tool_version"] = kToolVersion;
  doc["metric"] = hist.metric_name;
  doc["bin_width"] = hist.bin_width;
  doc["n"] = hist.n;
  doc["mean"] = hist.mean;
  doc["stddev"] = hist.stddev;
  ordered_json bins = ordered_json::array();
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double lo =
        static_cast<double>(hist.first_bin + static_cast<long long>(i)) *
        hist.bin_width;
    ordered_json o;
    o["lo"] = lo;
    o["hi"] = lo + hist.bin_width;
    o["count"] = hist.counts[i];
    bins.push_back(std::move(o));
  }
  doc["bins"] = std::move(bins);
  return doc;
}

std::string canonical_json(const ordered_json& doc) { return doc.dump(2) + "\n"; }

std::string render_histogram_svg(const GapHistogram& hist,
                                 const std::string& title) {
  constexpr int kWidth = 640, kHeight = 400;
  constexpr int kLeft = 50, kRight = 20, kTop = 40, kBottom = 40;
  const int plot_w = kWidth - kLeft - kRight;
  const int plot_h = kHeight - kTop - kBottom;

  std::uint64_t max_count = 1;
  for (std::uint64_t c : hist.counts) max_count = std::max(max_count, c);
  const std::size_t n_bins = std::max<std::size_t>(hist.counts.size(), 1);
  const double x_lo = static_cast<double>(hist.first_bin) * hist.bin_width;
  const double x_span = static_cast<double>(n_bins) * hist.bin_width;
  const auto x_of = [&](double v) {
    return kLeft + (v - x_lo) / x_span * plot_w;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n";
  svg << "  <text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  svg << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
      << kLeft + plot_w << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";

  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double lo =
        static_cast<double>(hist.first_bin + static_cast<long long>(i)) *
        hist.bin_width;
    const double frac =
        static_cast<double>(hist.counts[i]) / static_cast<double>(max_count);
    const double bar_h = frac * plot_h;
    svg << "  <rect x=\"" << shortest_double(x_of(lo)) << "\" y=\""
        << shortest_double(kTop + plot_h - bar_h) << "\" width=\""
        << shortest_double(static_cast<double>(plot_w) / n_bins) << "\" height=\""
        << shortest_double(bar_h)
        << "\" fill=\"#6699cc\" stroke=\"#335577\"/>\n";
  }

  // Mean: solid rule; mean +/- sd: dotted rules.
  const auto vline = [&](double v, const char* dash) {
    if (v < x_lo || v > x_lo + x_span) return;
    svg << "  <line x1=\"" << shortest_double(x_of(v)) << "\" y1=\"" << kTop
        << "\" x2=\"" << shortest_double(x_of(v)) << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"black\"" << dash << "/>\n";
  };
  vline(hist.mean, "");
  vline(hist.mean - hist.stddev, " stroke-dasharray=\"4 3\"");
  vline(hist.mean + hist.stddev, " stroke-dasharray=\"4 3\"");

  svg << "  <text x=\"" << kLeft << "\" y=\"" << kHeight - 12
      << "\" font-family=\"sans-serif\" font-size=\"12\">min "
      << shortest_double(x_lo) << "</text>\n";
  svg << "  <text x=\"" << kLeft + plot_w << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
         "max "
      << shortest_double(x_lo + x_span) << "</text>\n";
  svg << "  <text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">mean "
      << shortest_double(hist.mean) << " sd " << shortest_double(hist.stddev)
      << " n " << hist.n << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string seg_per_image_csv(const SegReport& report,
                              const DatasetManifest& manifest) {
  std::ostringstream os;
  os << "image_id,jaccard,thresholded_jaccard,failed,stratum\n";
  for (const auto& sc : report.per_image) {
    const ManifestEntry* entry = manifest.find(sc.image_id);
    os << sc.image_id << "," << shortest_double(sc.jaccard) << ","
       << shortest_double(sc.thresholded_jaccard) << ","
       << (sc.failed ? "true" : "false") << ","
       << (entry ? to_string(entry->stratum) : "") << "\n";
  }
  return os.str();
}

std::string attr_per_attribute_csv(const AttributeReport& report) {
  std::ostringstream os;
  os << "attribute,jaccard\n";
  for (const auto& [name, value] : report.per_attribute) {
    os << name << "," << shortest_double(value) << "\n";
  }
  return os.str();
}

std::string cls_per_image_csv(const ClsEvaluation& eval,
                              const DatasetManifest& manifest) {
  std::ostringstream os;
  os << "image_id,true_label,decision,correct\n";
  for (const auto& [id, decided] : eval.decisions) {
    const ManifestEntry* entry = manifest.find(id);
    const bool correct = entry && entry->label == decided;
    os << id << "," << (entry ? to_string(entry->label) : "") << ","
       << to_string(decided) << "," << (correct ? "true" : "false") << "\n";
  }
  return os.str();
}

SubmissionScore submission_score_from_seg(const std::string& submission_id,
                                          const SegReport& report) {
  SubmissionScore score;
  score.submission_id = submission_id;
  score.aggregates[metric::kFailureRate] = report.failure_rate;
  score.aggregates[metric::kThresholdedJaccard] = report.mean_thresholded_jaccard;
  score.aggregates[metric::kJaccard] = report.mean_jaccard;
  for (const auto& [stratum, summary] : report.per_stratum) {
    auto& m = score.per_stratum[to_string(stratum)];
    m[metric::kFailureRate] = summary.failure_rate;
    m[metric::kThresholdedJaccard] = summary.mean_thresholded_jaccard;
    m[metric::kJaccard] = summary.mean_jaccard;
  }
  for (const auto& sc : report.per_image) {
    auto& m = score.per_image[sc.image_id];
    m[metric::kJaccard] = sc.jaccard;
    m[metric::kThresholdedJaccard] = sc.thresholded_jaccard;
    m["failed"] = sc.failed ? 1.0 : 0.0;
  }
  score.flags = report.flags;
  return score;
}

SubmissionScore submission_score_from_cls(const std::string& submission_id,
                                          const ClsEvaluation& eval) {
  SubmissionScore score;
  score.submission_id = submission_id;
  auto fill = [](std::map<std::string, double>& m, const ClsReport& report) {
    m[metric::kBalancedAccuracy] = report.bacc;
    m[metric::kAccuracy] = report.acc;
    if (report.mean_auc) m[metric::kMeanAuc] = *report.mean_auc;
    for (int c = 0; c < kNumClasses; ++c) {
      if (report.per_class_auc[c]) {
        m[metric::auc_for(static_cast<DiagnosisClass>(c))] =
            *report.per_class_auc[c];
      }
    }
  };
  fill(score.aggregates, eval.all);
  if (eval.internal) fill(score.per_partition[kPartitionNames[0]], *eval.internal);
  if (eval.external) fill(score.per_partition[kPartitionNames[1]], *eval.external);
  score.flags = eval.flags;
  return score;
}

SubmissionScore submission_score_from_report(const ordered_json& report) {
  if (!report.is_object() || !report.contains("results") ||
      !report.contains("submission_id")) {
    throw BenchError(errc::kParseError,
                     "report document lacks submission_id/results");
  }
  SubmissionScore score;
  score.submission_id = report["submission_id"].get<std::string>();
  const auto& results = report["results"];
  if (results.contains("aggregates")) {
    for (const auto& [key, value] : results["aggregates"].items()) {
      if (value.is_number()) score.aggregates[key] = value.get<double>();
    }
  }
  if (results.contains("per_stratum")) {
    for (const auto& [name, metrics] : results["per_stratum"].items()) {
      for (const auto& [key, value] : metrics.items()) {
        if (value.is_number()) score.per_stratum[name][key] = value.get<double>();
      }
    }
  }
  if (results.contains("scopes")) {
    for (const char* scope : {"INTERNAL", "EXTERNAL"}) {
      if (!results["scopes"].contains(scope) ||
          !results["scopes"][scope].is_object()) {
        continue;
      }
      for (const auto& [key, value] : results["scopes"][scope].items()) {
        if ((key.rfind("auc_", 0) == 0 || key == metric::kBalancedAccuracy ||
             key == metric::kAccuracy || key == metric::kMeanAuc) &&
            value.is_number()) {
          score.per_partition[scope][key] = value.get<double>();
        }
      }
      // per_class_auc nests one level deeper.
      if (results["scopes"][scope].contains("per_class_auc")) {
        for (const auto& [cls, value] :
             results["scopes"][scope]["per_class_auc"].items()) {
          if (value.is_number()) {
            score.per_partition[scope]["auc_" + cls] = value.get<double>();
          }
        }
      }
    }
  }
  return score;
}

}  // namespace lesionbench
