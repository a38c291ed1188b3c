#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "lesionbench/commands.hpp"
#include "lesionbench/dataset_io.hpp"
#include "lesionbench/errors.hpp"
#include "lesionbench/numeric.hpp"
#include "lesionbench/report.hpp"
#include "lesionbench/synth.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace lesionbench;
using test::TempDir;

namespace {

std::string synth_config(const std::string& task, std::uint64_t seed,
                         std::size_t n_images, std::size_t n_submissions,
                         const std::string& extra = {}) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["task"] = task;
  doc["seed"] = seed;
  doc["n_images"] = n_images;
  doc["image_size"] = 48;
  doc["n_submissions"] = n_submissions;
  std::string text = doc.dump(2);
  if (!extra.empty()) {
    text.pop_back();  // drop '}'
    text += ",\n" + extra + "\n}";
  }
  return text + "\n";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LESION_BENCH_BIN) + " " + args;
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("canonical json uses shortest round-trip numbers") {
  ordered_json doc;
  doc["a"] = 0.1;
  doc["b"] = 1.0 / 3.0;
  doc["c"] = 1.0;
  const std::string text = canonical_json(doc);
  CHECK(text.find("0.1") != std::string::npos);
  CHECK(text.find("0.10000000000000001") == std::string::npos);
  CHECK(text.find("0.3333333333333333") != std::string::npos);
  CHECK(text.back() == '\n');
  CHECK(canonical_json(doc) == text);  // stable
}

TEST_CASE("report envelope carries the fixed key order") {
  const ordered_json doc = report_envelope(Task::SEGMENTATION, "deadbeef", "sub");
  auto it = doc.begin();
  CHECK(it.key() == "schema_version");
  ++it;
  CHECK(it.key() == "tool_version");
  ++it;
  CHECK(it.key() == "task");
  ++it;
  CHECK(it.key() == "manifest_digest");
  ++it;
  CHECK(it.key() == "submission_id");
  CHECK(doc["task"] == "segmentation");
}

TEST_CASE("submission score extraction inverts the report emitters") {
  SegReport seg;
  seg.threshold = 0.65;
  seg.n_images = 2;
  seg.mean_jaccard = 0.8;
  seg.mean_thresholded_jaccard = 0.7;
  seg.failure_rate = 0.25;
  seg.per_stratum[SegStratum::MEL] = {0.5, 0.6, 0.7, 1};
  ordered_json doc = report_envelope(Task::SEGMENTATION, "d", "sub_a");
  doc["results"] = seg_results_json(seg);
  doc["flags"] = flags_json({});

  const SubmissionScore score = submission_score_from_report(doc);
  CHECK(score.submission_id == "sub_a");
  CHECK(score.aggregates.at(metric::kJaccard) == 0.8);
  CHECK(score.aggregates.at(metric::kThresholdedJaccard) == 0.7);
  CHECK(score.aggregates.at(metric::kFailureRate) == 0.25);
  CHECK(score.per_stratum.at("MEL").at(metric::kJaccard) == 0.7);
}

TEST_CASE("svg rendering is deterministic and carries the rules") {
  GapHistogram hist;
  hist.metric_name = "bacc";
  hist.bin_width = 0.02;
  hist.first_bin = -2;
  hist.counts = {1, 0, 3, 2};
  hist.mean = 0.01;
  hist.stddev = 0.02;
  hist.n = 6;
  const std::string svg = render_histogram_svg(hist, "bacc gaps");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<rect") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("bacc gaps") != std::string::npos);
  CHECK(render_histogram_svg(hist, "bacc gaps") == svg);
}

TEST_CASE("segmentation pipeline end to end with rerun determinism") {
  TempDir tmp("e2e_seg");
  write_file_bytes(tmp.str("config.json"),
                   synth_config("segmentation", 99, 6, 2,
                                "  \"perturbation\": {\"kind\": \"dilate\", "
                                "\"amount\": 2.0}"));
  const SynthOutput gen = cmd_synth(tmp.str("config.json"), tmp.str("out"));
  CHECK_FALSE(gen.written.empty());

  const std::string manifest = tmp.str("out/dataset/manifest.csv");
  // sub_001 gets amount 0 from the default sweep: the identity submission.
  const ScoreOutput perfect = cmd_score_seg(
      manifest, tmp.str("out/submissions/sub_001"), std::nullopt,
      tmp.str("report1.json"));
  CHECK(perfect.report["results"]["aggregates"]["jaccard"] == 1.0);
  CHECK(perfect.report["results"]["aggregates"]["thresholded_jaccard"] == 1.0);
  CHECK(perfect.report["results"]["aggregates"]["failure_rate"] == 0.0);
  CHECK(perfect.report["results"]["threshold"] == 0.65);

  const ScoreOutput degraded = cmd_score_seg(
      manifest, tmp.str("out/submissions/sub_002"), std::nullopt,
      tmp.str("report2.json"));
  const double j = degraded.report["results"]["aggregates"]["jaccard"];
  const double tj = degraded.report["results"]["aggregates"]["thresholded_jaccard"];
  CHECK(j < 1.0);
  CHECK(tj <= j);

  // Rerun: byte-identical outputs.
  const std::string first = read_file_bytes(tmp.str("report1.json"));
  const std::string first_csv = read_file_bytes(perfect.csv_path);
  cmd_score_seg(manifest, tmp.str("out/submissions/sub_001"), std::nullopt,
                tmp.str("report1.json"));
  CHECK(read_file_bytes(tmp.str("report1.json")) == first);
  CHECK(read_file_bytes(perfect.csv_path) == first_csv);

  // Per-image CSV has the documented header.
  CHECK(first_csv.rfind("image_id,jaccard,thresholded_jaccard,failed,stratum\n",
                        0) == 0);
}

TEST_CASE("attribute pipeline end to end") {
  TempDir tmp("e2e_attr");
  write_file_bytes(
      tmp.str("config.json"),
      synth_config("attributes", 7, 5, 1,
                   "  \"attribute_names\": [\"alpha\", \"beta\", \"ghost\"],\n"
                   "  \"perturbation\": {\"kind\": \"dilate\", \"amount\": 0.0}"));
  cmd_synth(tmp.str("config.json"), tmp.str("out"));
  const ScoreOutput out = cmd_score_attr(tmp.str("out/dataset/manifest.csv"),
                                         tmp.str("out/submissions/sub_001"),
                                         tmp.str("report.json"));
  // Identity submission: every attribute Jaccard is 1.
  for (const auto& [name, value] :
       out.report["results"]["per_attribute"].items()) {
    CHECK(value.get<double>() == 1.0);
  }
  CHECK(out.report["results"]["aggregates"]["mean_attribute_jaccard"] == 1.0);
  // "ghost" never occurs and the submission is all-background there.
  bool absent_flag = false;
  for (const auto& f : out.report["flags"]) {
    absent_flag |= f["code"] == "AttributeAbsentEverywhere" &&
                   f["context"] == "ghost";
  }
  CHECK(absent_flag);
}

TEST_CASE("attribute command on the hand-aggregated two-image fixture") {
  TempDir tmp("attr_fixture");
  // Dataset: one attribute over two images with counts {2,1,1} and {3,0,1},
  // so the dataset-aggregated Jaccard is 5/8 = 0.625.
  DatasetManifest manifest;
  manifest.task = Task::ATTRIBUTES;
  manifest.attribute_names = {"net"};
  for (const char* id : {"img_a", "img_b"}) {
    ManifestEntry e;
    e.image_id = id;
    e.attribute_mask_paths = {std::string("masks/") + id + ".png"};
    manifest.entries.push_back(e);
  }
  fs::create_directories(tmp.str("masks"));
  write_manifest(tmp.str("manifest.csv"), manifest);
  write_mask_png(tmp.str("masks/img_a.png"), test::rect_mask(8, 1, 0, 0, 3, 1));
  write_mask_png(tmp.str("masks/img_b.png"), test::rect_mask(8, 1, 0, 0, 4, 1));

  fs::create_directories(tmp.str("sub"));
  write_mask_png(tmp.str("sub/img_a_attribute_net.png"),
                 test::rect_mask(8, 1, 1, 0, 3, 1));
  write_mask_png(tmp.str("sub/img_b_attribute_net.png"),
                 test::rect_mask(8, 1, 0, 0, 3, 1));

  const ScoreOutput out = cmd_score_attr(tmp.str("manifest.csv"), tmp.str("sub"),
                                         tmp.str("report.json"));
  CHECK(out.report["results"]["per_attribute"]["net"] == 0.625);
  CHECK(out.report["results"]["aggregates"]["mean_attribute_jaccard"] == 0.625);
}

TEST_CASE("rank divergence file shows off-diagonal pairs for an imbalanced population") {
  TempDir tmp("rank_div");
  // Three reports: one submission overfits prevalence (best acc, worst bacc).
  const std::vector<std::tuple<std::string, double, double>> rows = {
      {"balanced", 0.80, 0.85},
      {"midfield", 0.82, 0.70},
      {"overfit", 0.91, 0.59},
  };
  fs::create_directories(tmp.str("reports"));
  for (const auto& [id, acc, bacc] : rows) {
    ordered_json doc = report_envelope(Task::CLASSIFICATION, "d", id);
    ordered_json aggregates;
    aggregates["bacc"] = bacc;
    aggregates["acc"] = acc;
    doc["results"] = ordered_json{{"aggregates", aggregates}};
    doc["flags"] = ordered_json::array();
    write_file_bytes(tmp.str("reports/" + id + ".json"), canonical_json(doc));
  }
  const RankOutput out = cmd_rank({tmp.str("reports/*.json")}, "bacc",
                                  std::string("acc"), 0.02, tmp.str("out"));
  REQUIRE(out.divergence.has_value());
  bool off_diagonal = false;
  for (const auto& p : out.divergence->pairs) {
    if (p.submission_id == "overfit") {
      CHECK(p.rank_a == 3);
      CHECK(p.rank_b == 1);
      off_diagonal = p.rank_a != p.rank_b;
    }
  }
  CHECK(off_diagonal);

  // The emitted JSON carries the same pairs.
  const auto doc = ordered_json::parse(
      read_file_bytes(tmp.str("out/divergence_bacc_vs_acc.json")));
  CHECK(doc["pairs"].size() == 3);
}

TEST_CASE("report aggregates are recomputable from the per-image CSV") {
  TempDir tmp("recompute");
  write_file_bytes(tmp.str("config.json"),
                   synth_config("segmentation", 321, 10, 2,
                                "  \"perturbation\": {\"kind\": "
                                "\"boundary_noise\", \"amount\": 2.0}"));
  cmd_synth(tmp.str("config.json"), tmp.str("out"));
  const ScoreOutput out = cmd_score_seg(
      tmp.str("out/dataset/manifest.csv"), tmp.str("out/submissions/sub_002"),
      std::nullopt, tmp.str("report.json"));

  // Re-read the per-image CSV (shortest round-trip values parse back
  // bit-exactly) and recompute every aggregate in image-id order.
  std::istringstream csv(read_file_bytes(out.csv_path));
  std::string line;
  std::getline(csv, line);  // header
  std::vector<double> j, tj;
  std::size_t failed = 0, n = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    REQUIRE(fields.size() == 5);
    j.push_back(std::stod(fields[1]));
    tj.push_back(std::stod(fields[2]));
    failed += fields[3] == "true";
    ++n;
  }
  CompensatedSum sj, stj;
  for (double v : j) sj.add(v);
  for (double v : tj) stj.add(v);
  const auto& aggregates = out.report["results"]["aggregates"];
  CHECK(aggregates["jaccard"].get<double>() == sj.value() / double(n));
  CHECK(aggregates["thresholded_jaccard"].get<double>() ==
        stj.value() / double(n));
  CHECK(aggregates["failure_rate"].get<double>() == double(failed) / double(n));
}

TEST_CASE("classification pipeline and rank command end to end") {
  TempDir tmp("e2e_cls");
  write_file_bytes(tmp.str("config.json"),
                   synth_config("classification", 123, 240, 4,
                                "  \"accuracy_knob\": 0.75,\n"
                                "  \"external_fraction\": 0.25,\n"
                                "  \"external_gap_knob\": 0.5"));
  cmd_synth(tmp.str("config.json"), tmp.str("out"));

  fs::create_directories(tmp.str("reports"));
  for (int s = 1; s <= 4; ++s) {
    const std::string id = "sub_00" + std::to_string(s);
    const ScoreOutput out = cmd_score_cls(
        tmp.str("out/dataset/manifest.csv"),
        tmp.str("out/submissions/" + id + ".csv"),
        tmp.str("reports/" + id + ".json"));
    CHECK(out.report["results"]["scopes"].contains("ALL"));
    CHECK(out.report["results"]["scopes"].contains("INTERNAL"));
    CHECK(out.report["results"]["scopes"].contains("EXTERNAL"));
    CHECK(out.report["results"]["gaps"].contains("bacc"));
    // ROC polylines anchored at the corners.
    const auto& roc = out.report["results"]["scopes"]["ALL"]["roc"];
    for (const auto& [cls, points] : roc.items()) {
      if (points.is_null()) continue;
      CHECK(points.front() == ordered_json::array({0.0, 0.0}));
      CHECK(points.back() == ordered_json::array({1.0, 1.0}));
    }
  }

  const RankOutput rank =
      cmd_rank({tmp.str("reports/*.json")}, "bacc", std::string("acc"), 0.02,
               tmp.str("rank"));
  CHECK(rank.leaderboard.rows.size() == 4);
  REQUIRE(rank.divergence.has_value());
  CHECK(rank.divergence->pairs.size() == 4);
  REQUIRE(rank.gap_hist.has_value());
  CHECK(rank.gap_hist->n == 4);
  CHECK(fs::exists(tmp.str("rank/leaderboard_bacc.json")));
  CHECK(fs::exists(tmp.str("rank/leaderboard_bacc.csv")));
  CHECK(fs::exists(tmp.str("rank/divergence_bacc_vs_acc.json")));
  CHECK(fs::exists(tmp.str("rank/gap_histogram_bacc.json")));
  CHECK(fs::exists(tmp.str("rank/gap_histogram_bacc.svg")));
  CHECK(fs::exists(tmp.str("rank/metric_histogram_bacc.json")));

  // Single-report leaderboard: rank 1.
  const RankOutput single =
      cmd_rank({tmp.str("reports/sub_001.json")}, "bacc", std::nullopt, 0.02,
               tmp.str("rank_single"));
  REQUIRE(single.leaderboard.rows.size() == 1);
  CHECK(single.leaderboard.rows[0].rank == 1);

  // Identical metrics compared: rho = 1.
  const RankOutput self =
      cmd_rank({tmp.str("reports/*.json")}, "bacc", std::string("bacc"), 0.02,
               tmp.str("rank_self"));
  REQUIRE(self.divergence.has_value());
  CHECK(self.divergence->spearman_rho == 1.0);
}

TEST_CASE("score command validation failures surface as BenchError") {
  TempDir tmp("cmd_bad");
  CHECK_THROWS_AS(cmd_score_seg(tmp.str("missing.csv"), tmp.str("nowhere"),
                                std::nullopt, tmp.str("r.json")),
                  BenchError);

  // Manifest task mismatch.
  DatasetManifest cls;
  cls.task = Task::CLASSIFICATION;
  write_manifest(tmp.str("cls.csv"), cls);
  CHECK_THROWS_WITH_AS(cmd_score_seg(tmp.str("cls.csv"), tmp.str("nowhere"),
                                     std::nullopt, tmp.str("r.json")),
                       doctest::Contains("segmentation"), BenchError);
}

TEST_CASE("cli binary: exit codes and stderr contract") {
  TempDir tmp("cli");
  write_file_bytes(tmp.str("config.json"), synth_config("classification", 5, 30, 1));
  CHECK(run_cli("synth " + tmp.str("config.json") + " --out-dir " +
                tmp.str("out") + " > /dev/null") == 0);
  CHECK(run_cli("score-cls " + tmp.str("out/dataset/manifest.csv") + " " +
                tmp.str("out/submissions/sub_001.csv") + " --out " +
                tmp.str("report.json") + " > /dev/null") == 0);
  CHECK(fs::exists(tmp.str("report.json")));

  // Validation failure: exit 2 and a LEVEL: code: message diagnostic.
  const std::string err_file = tmp.str("err.txt");
  CHECK(run_cli("score-cls " + tmp.str("out/dataset/manifest.csv") + " " +
                tmp.str("nonexistent.csv") + " --out " + tmp.str("x.json") +
                " 2> " + err_file) == 2);
  const std::string err = read_file_bytes(err_file);
  CHECK(err.rfind("ERROR: ", 0) == 0);

  // derive-threshold prints the protocol constants.
  const std::string out_file = tmp.str("thr.txt");
  CHECK(run_cli("derive-threshold 0.743 0.754 0.861 > " + out_file) == 0);
  const std::string thr = read_file_bytes(out_file);
  CHECK(thr.find("threshold 0.65") != std::string::npos);
  CHECK(thr.find("mean 0.786") != std::string::npos);
  CHECK(thr.find("range 0.118") != std::string::npos);

  // Mistyped config fields are validation failures, not internal errors.
  write_file_bytes(tmp.str("bad_types.json"),
                   "{\"schema_version\": \"one\", \"task\": \"classification\"}");
  CHECK(run_cli("synth " + tmp.str("bad_types.json") + " --out-dir " +
                tmp.str("bad_out") + " 2> /dev/null") == 2);
}
