#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lesionbench/commands.hpp"
#include "lesionbench/errors.hpp"
#include "lesionbench/mask_metrics.hpp"
#include "lesionbench/numeric.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;

void print_warnings(const lesionbench::ordered_json& report) {
  if (!report.contains("flags")) return;
  for (const auto& flag : report["flags"]) {
    if (flag["code"] == "UnexpectedFile") {
      std::cerr << "WARN: UnexpectedFile: " << flag["context"].get<std::string>()
                << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lesion-bench: deterministic scoring for lesion segmentation, "
               "attribute detection and disease classification submissions"};
  app.require_subcommand(1);

  std::string manifest_path, submission_dir, csv_path, out_path, submission_id;
  std::optional<double> threshold;
  std::vector<std::string> report_patterns;
  std::string metric_name;
  std::optional<std::string> compare_metric;
  double bin_width = 0.02;
  std::string out_dir, config_path;
  std::vector<double> interobserver;

  auto* score_seg = app.add_subcommand(
      "score-seg", "Score a lesion segmentation submission directory");
  score_seg->add_option("manifest", manifest_path, "Manifest CSV")->required();
  score_seg->add_option("submission", submission_dir, "Submission directory")
      ->required();
  score_seg->add_option("--threshold", threshold,
                        "Thresholded-Jaccard cutoff (default: manifest value, "
                        "0.65)");
  score_seg->add_option("--out", out_path, "Report JSON path")->required();
  score_seg->add_option("--submission-id", submission_id,
                        "Override the submission id (default: directory name)");

  auto* score_attr = app.add_subcommand(
      "score-attr", "Score a lesion attribute detection submission directory");
  score_attr->add_option("manifest", manifest_path, "Manifest CSV")->required();
  score_attr->add_option("submission", submission_dir, "Submission directory")
      ->required();
  score_attr->add_option("--out", out_path, "Report JSON path")->required();
  score_attr->add_option("--submission-id", submission_id,
                         "Override the submission id");

  auto* score_cls = app.add_subcommand(
      "score-cls", "Score a disease classification prediction CSV");
  score_cls->add_option("manifest", manifest_path, "Manifest CSV")->required();
  score_cls->add_option("predictions", csv_path, "Prediction CSV")->required();
  score_cls->add_option("--out", out_path, "Report JSON path")->required();
  score_cls->add_option("--submission-id", submission_id,
                        "Override the submission id (default: CSV stem)");

  auto* rank = app.add_subcommand(
      "rank", "Build leaderboards and divergence/histogram analyses from "
              "score reports");
  rank->add_option("reports", report_patterns,
                   "Report JSON paths or glob patterns")
      ->required();
  rank->add_option("--metric", metric_name, "Aggregate metric to rank by")
      ->required();
  rank->add_option("--compare-metric", compare_metric,
                   "Second metric for rank-divergence output");
  rank->add_option("--bin-width", bin_width, "Histogram bin width")
      ->check(CLI::PositiveNumber);
  rank->add_option("--out", out_dir, "Output directory")->required();

  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic dataset plus submissions from a config");
  synth->add_option("config", config_path, "Synth config JSON")->required();
  synth->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* derive = app.add_subcommand(
      "derive-threshold",
      "Derive the Thresholded-Jaccard cutoff from interobserver values");
  derive->add_option("values", interobserver, "Interobserver Jaccard values")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (score_seg->parsed()) {
      const auto out = lesionbench::cmd_score_seg(
          manifest_path, submission_dir, threshold, out_path, submission_id);
      print_warnings(out.report);
      std::cout << out.report_path << "\n" << out.csv_path << "\n";
    } else if (score_attr->parsed()) {
      const auto out = lesionbench::cmd_score_attr(manifest_path, submission_dir,
                                                   out_path, submission_id);
      print_warnings(out.report);
      std::cout << out.report_path << "\n" << out.csv_path << "\n";
    } else if (score_cls->parsed()) {
      const auto out = lesionbench::cmd_score_cls(manifest_path, csv_path,
                                                  out_path, submission_id);
      std::cout << out.report_path << "\n" << out.csv_path << "\n";
    } else if (rank->parsed()) {
      const auto out = lesionbench::cmd_rank(report_patterns, metric_name,
                                             compare_metric, bin_width, out_dir);
      for (const auto& path : out.written) std::cout << path << "\n";
    } else if (synth->parsed()) {
      const auto out = lesionbench::cmd_synth(config_path, out_dir);
      for (const auto& path : out.written) std::cout << path << "\n";
    } else if (derive->parsed()) {
      const auto d = lesionbench::derive_threshold(interobserver);
      std::cout << "threshold " << lesionbench::shortest_double(d.threshold)
                << "\nmean " << lesionbench::shortest_double(d.mean)
                << "\nrange " << lesionbench::shortest_double(d.range) << "\n";
    }
  } catch (const lesionbench::BenchError& e) {
    std::cerr << "ERROR: " << e.code() << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "ERROR: ParseError: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "ERROR: Internal: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
