#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lesionbench/classification_metrics.hpp"
#include "lesionbench/core.hpp"
#include "lesionbench/mask_metrics.hpp"
#include "lesionbench/ranking_analysis.hpp"

namespace lesionbench {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

// All report documents share the envelope
//   {schema_version, tool_version, task, manifest_digest, submission_id,
//    results, flags}
// with fixed key order and shortest-round-trip number formatting, so
// identical inputs serialize byte-identically (docs/report.schema.json).
ordered_json report_envelope(Task task, const std::string& manifest_digest,
                             const std::string& submission_id);

ordered_json seg_results_json(const SegReport& report);
ordered_json attr_results_json(const AttributeReport& report);
ordered_json cls_results_json(const ClsEvaluation& eval);

ordered_json flags_json(const std::vector<Flag>& flags);

ordered_json leaderboard_json(const Leaderboard& board);
ordered_json divergence_json(const RankDivergence& divergence);
ordered_json histogram_json(const GapHistogram& hist);

// Canonical serialization: 2-space indent plus trailing newline.
std::string canonical_json(const ordered_json& doc);

// Minimal bar chart with a solid mean rule and dotted mean +/- sd rules.
std::string render_histogram_svg(const GapHistogram& hist,
                                 const std::string& title);

// Per-image CSV companions.
std::string seg_per_image_csv(const SegReport& report,
                              const DatasetManifest& manifest);
std::string attr_per_attribute_csv(const AttributeReport& report);
std::string cls_per_image_csv(const ClsEvaluation& eval,
                              const DatasetManifest& manifest);

// Rebuilds the ranking view of a report document (the inverse of the
// score-command emitters, used by cmd_rank).
SubmissionScore submission_score_from_report(const ordered_json& report);

// Converts module outputs into the shared SubmissionScore shape.
SubmissionScore submission_score_from_seg(const std::string& submission_id,
                                          const SegReport& report);
SubmissionScore submission_score_from_cls(const std::string& submission_id,
                                          const ClsEvaluation& eval);

}  // namespace lesionbench
