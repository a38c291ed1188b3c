#include "lesionbench/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "lesionbench/dataset_io.hpp"
#include "lesionbench/errors.hpp"
#include "lesionbench/numeric.hpp"
#include "lesionbench/synth.hpp"

namespace fs = std::filesystem;

namespace lesionbench {

namespace {

std::string companion_csv_path(const std::string& out_path) {
  fs::path p(out_path);
  p.replace_extension(".csv");
  if (p.string() == out_path) return out_path + ".per_image.csv";
  return p.string();
}

void append_flags(std::vector<Flag>& into, const std::vector<Flag>& from) {
  into.insert(into.end(), from.begin(), from.end());
}

bool wildcard_match(const std::string& pattern, const std::string& name) {
  std::size_t p = 0, n = 0;
  std::size_t star = std::string::npos, star_n = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      star_n = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++star_n;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::vector<std::string> expand_report_patterns(
    const std::vector<std::string>& patterns) {
  std::set<std::string> files;
  for (const auto& pattern : patterns) {
    if (pattern.find('*') == std::string::npos &&
        pattern.find('?') == std::string::npos) {
      if (!fs::is_regular_file(pattern)) {
        throw BenchError(errc::kIoError, "report file not found: " + pattern);
      }
      files.insert(pattern);
      continue;
    }
    const fs::path p(pattern);
    const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    const std::string name_pattern = p.filename().string();
    if (!fs::is_directory(dir)) {
      throw BenchError(errc::kIoError,
                       "glob directory not found: " + dir.string());
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (wildcard_match(name_pattern, entry.path().filename().string())) {
        files.insert(entry.path().string());
      }
    }
  }
  if (files.empty()) {
    throw BenchError(errc::kIoError, "no report files match the given patterns");
  }
  return {files.begin(), files.end()};
}

void require_task(const DatasetManifest& manifest, Task task,
                  const std::string& command) {
  if (manifest.task != task) {
    throw BenchError(errc::kParseError,
                     command + " needs a " + to_string(task) +
                         " manifest, got task '" + to_string(manifest.task) + "'");
  }
}

}  // namespace

ScoreOutput cmd_score_seg(const std::string& manifest_path,
                          const std::string& submission_dir,
                          std::optional<double> threshold,
                          const std::string& out_path,
                          std::string submission_id) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  require_task(manifest, Task::SEGMENTATION, "score-seg");
  SubmissionBundle bundle = load_segmentation_submission(submission_dir, manifest);
  if (!submission_id.empty()) bundle.submission_id = submission_id;

  const auto ground_truth = load_ground_truth_masks(manifest);
  const double t = threshold.value_or(manifest.threshold);
  const SegReport seg = score_segmentation(manifest, ground_truth,
                                           bundle.seg_masks, t);

  ordered_json doc = report_envelope(Task::SEGMENTATION,
                                     manifest_digest(manifest_path),
                                     bundle.submission_id);
  doc["results"] = seg_results_json(seg);
  std::vector<Flag> flags = seg.flags;
  append_flags(flags, bundle.warnings);
  doc["flags"] = flags_json(flags);

  ScoreOutput out;
  out.report = std::move(doc);
  out.report_path = out_path;
  out.csv_path = companion_csv_path(out_path);
  write_file_bytes(out.report_path, canonical_json(out.report));
  write_file_bytes(out.csv_path, seg_per_image_csv(seg, manifest));
  return out;
}

ScoreOutput cmd_score_attr(const std::string& manifest_path,
                           const std::string& submission_dir,
                           const std::string& out_path,
                           std::string submission_id) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  require_task(manifest, Task::ATTRIBUTES, "score-attr");
  SubmissionBundle bundle = load_attribute_submission(submission_dir, manifest);
  if (!submission_id.empty()) bundle.submission_id = submission_id;

  const auto ground_truth = load_attribute_ground_truth(manifest);
  const AttributeReport attr =
      aggregate_attribute_jaccard(manifest, ground_truth, bundle.attr_masks);

  ordered_json doc = report_envelope(Task::ATTRIBUTES,
                                     manifest_digest(manifest_path),
                                     bundle.submission_id);
  doc["results"] = attr_results_json(attr);
  std::vector<Flag> flags = attr.flags;
  append_flags(flags, bundle.warnings);
  doc["flags"] = flags_json(flags);

  ScoreOutput out;
  out.report = std::move(doc);
  out.report_path = out_path;
  out.csv_path = companion_csv_path(out_path);
  write_file_bytes(out.report_path, canonical_json(out.report));
  write_file_bytes(out.csv_path, attr_per_attribute_csv(attr));
  return out;
}

ScoreOutput cmd_score_cls(const std::string& manifest_path,
                          const std::string& csv_path,
                          const std::string& out_path,
                          std::string submission_id) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  require_task(manifest, Task::CLASSIFICATION, "score-cls");
  const auto records = parse_classification_csv(csv_path, manifest);
  if (submission_id.empty()) {
    submission_id = fs::path(csv_path).stem().string();
  }
  const ClsEvaluation eval = score_classification(manifest, records);

  ordered_json doc = report_envelope(Task::CLASSIFICATION,
                                     manifest_digest(manifest_path),
                                     submission_id);
  doc["results"] = cls_results_json(eval);
  std::vector<Flag> flags = eval.flags;
  append_flags(flags, eval.all.flags);
  if (eval.internal) append_flags(flags, eval.internal->flags);
  if (eval.external) append_flags(flags, eval.external->flags);
  doc["flags"] = flags_json(flags);

  ScoreOutput out;
  out.report = std::move(doc);
  out.report_path = out_path;
  out.csv_path = companion_csv_path(out_path);
  write_file_bytes(out.report_path, canonical_json(out.report));
  write_file_bytes(out.csv_path, cls_per_image_csv(eval, manifest));
  return out;
}

RankOutput cmd_rank(const std::vector<std::string>& report_patterns,
                    const std::string& metric_name,
                    const std::optional<std::string>& compare_metric,
                    double bin_width, const std::string& out_dir) {
  const auto files = expand_report_patterns(report_patterns);
  std::vector<SubmissionScore> scores;
  std::set<std::string> ids;
  for (const auto& file : files) {
    const auto doc = nlohmann::ordered_json::parse(read_file_bytes(file),
                                                   nullptr, false);
    if (doc.is_discarded()) {
      throw BenchError(errc::kParseError, file + ": not valid JSON");
    }
    SubmissionScore score = submission_score_from_report(doc);
    if (!ids.insert(score.submission_id).second) {
      throw BenchError(errc::kParseError,
                       "duplicate submission id across reports: " +
                           score.submission_id);
    }
    scores.push_back(std::move(score));
  }

  fs::create_directories(out_dir);
  RankOutput out;
  const auto emit = [&](const std::string& name, const std::string& bytes) {
    const std::string path = (fs::path(out_dir) / name).string();
    write_file_bytes(path, bytes);
    out.written.push_back(path);
  };

  out.leaderboard = build_leaderboard(scores, metric_name);
  emit("leaderboard_" + metric_name + ".json",
       canonical_json(leaderboard_json(out.leaderboard)));
  std::ostringstream csv;
  csv << "rank,submission_id,value\n";
  for (const auto& row : out.leaderboard.rows) {
    csv << row.rank << "," << row.submission_id << ","
        << shortest_double(row.value) << "\n";
  }
  emit("leaderboard_" + metric_name + ".csv", csv.str());

  // Metric-value histogram across submissions (values in id order).
  {
    std::vector<std::pair<std::string, double>> by_id;
    for (const auto& s : scores) {
      by_id.emplace_back(s.submission_id, s.aggregates.at(metric_name));
    }
    std::sort(by_id.begin(), by_id.end());
    std::vector<double> values;
    values.reserve(by_id.size());
    for (const auto& [id, v] : by_id) values.push_back(v);
    const GapHistogram hist = make_histogram(values, metric_name, bin_width);
    emit("metric_histogram_" + metric_name + ".json",
         canonical_json(histogram_json(hist)));
    emit("metric_histogram_" + metric_name + ".svg",
         render_histogram_svg(hist, metric_name + " across submissions"));
  }

  if (compare_metric) {
    out.divergence = rank_divergence(scores, metric_name, *compare_metric);
    emit("divergence_" + metric_name + "_vs_" + *compare_metric + ".json",
         canonical_json(divergence_json(*out.divergence)));
  }

  const bool have_partitions = std::all_of(
      scores.begin(), scores.end(), [&](const SubmissionScore& s) {
        for (const char* part : {kPartitionNames[0], kPartitionNames[1]}) {
          auto it = s.per_partition.find(part);
          if (it == s.per_partition.end() || !it->second.count(metric_name)) {
            return false;
          }
        }
        return true;
      });
  if (have_partitions) {
    out.gap_hist = gap_histogram(scores, metric_name, bin_width);
    emit("gap_histogram_" + metric_name + ".json",
         canonical_json(histogram_json(*out.gap_hist)));
    emit("gap_histogram_" + metric_name + ".svg",
         render_histogram_svg(*out.gap_hist,
                              metric_name + " internal - external"));
  }
  return out;
}

namespace {

SynthConfig config_from_json(const nlohmann::ordered_json& doc,
                             const std::string& path) {
  SynthConfig config;
  if (!doc.is_object()) {
    throw BenchError(errc::kParseError, path + ": config must be a JSON object");
  }
  if (!doc.contains("schema_version") ||
      doc["schema_version"].get<int>() != 1) {
    throw BenchError(errc::kParseError,
                     path + ": config needs \"schema_version\": 1");
  }
  if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("n_images")) {
    config.n_images = doc["n_images"].get<std::size_t>();
  }
  if (doc.contains("image_size")) {
    config.image_size = doc["image_size"].get<int>();
  }
  if (doc.contains("perturbation")) {
    const auto& p = doc["perturbation"];
    if (!p.is_object() || !p.contains("kind") || !p.contains("amount")) {
      throw BenchError(errc::kParseError,
                       path + ": perturbation needs {kind, amount}");
    }
    const auto kind = parse_perturb_kind(p["kind"].get<std::string>());
    if (!kind) {
      throw BenchError(errc::kParseError,
                       path + ": unknown perturbation kind '" +
                           p["kind"].get<std::string>() + "'");
    }
    config.perturbation.kind = *kind;
    config.perturbation.amount = p["amount"].get<double>();
  }
  if (doc.contains("class_priors")) {
    const auto& priors = doc["class_priors"];
    if (!priors.is_array() || priors.size() != kNumClasses) {
      throw BenchError(errc::kParseError,
                       path + ": class_priors must hold exactly 7 numbers");
    }
    for (int c = 0; c < kNumClasses; ++c) {
      config.class_priors[c] = priors[c].get<double>();
    }
  }
  if (doc.contains("accuracy_knob")) {
    config.accuracy_knob = doc["accuracy_knob"].get<double>();
  }
  if (doc.contains("external_fraction")) {
    config.external_fraction = doc["external_fraction"].get<double>();
  }
  if (doc.contains("external_gap_knob")) {
    config.external_gap_knob = doc["external_gap_knob"].get<double>();
  }
  config.validate();
  return config;
}

std::vector<double> sweep_amounts(const nlohmann::ordered_json& doc,
                                  const SynthConfig& config,
                                  std::size_t n_submissions,
                                  const std::string& path) {
  std::vector<double> amounts;
  if (doc.contains("perturbation_sweep")) {
    const auto& sweep = doc["perturbation_sweep"];
    if (!sweep.is_array() || sweep.size() != n_submissions) {
      throw BenchError(errc::kParseError,
                       path + ": perturbation_sweep must list one amount per "
                              "submission");
    }
    for (const auto& v : sweep) amounts.push_back(v.get<double>());
    return amounts;
  }
  // Default sweep: identity up to the configured amount.
  for (std::size_t s = 0; s < n_submissions; ++s) {
    const double t = n_submissions == 1
                         ? 1.0
                         : static_cast<double>(s) /
                               static_cast<double>(n_submissions - 1);
    amounts.push_back(config.perturbation.amount * t);
  }
  return amounts;
}

}  // namespace

SynthOutput cmd_synth(const std::string& config_path, const std::string& out_dir) {
  const auto doc = nlohmann::ordered_json::parse(read_file_bytes(config_path),
                                                 nullptr, false);
  if (doc.is_discarded()) {
    throw BenchError(errc::kParseError, config_path + ": not valid JSON");
  }
  const SynthConfig config = config_from_json(doc, config_path);
  if (!doc.contains("task") || !doc["task"].is_string()) {
    throw BenchError(errc::kMissingField,
                     config_path + ": missing string field 'task'");
  }
  const std::string task = doc["task"].get<std::string>();
  std::size_t n_submissions = 1;
  if (doc.contains("n_submissions")) {
    n_submissions = doc["n_submissions"].get<std::size_t>();
  }

  const fs::path root(out_dir);
  const fs::path dataset_dir = root / "dataset";
  const fs::path masks_dir = dataset_dir / "masks";
  const fs::path subs_dir = root / "submissions";
  fs::create_directories(masks_dir);
  fs::create_directories(subs_dir);

  SynthOutput out;
  const auto note = [&](const fs::path& p) { out.written.push_back(p.string()); };
  const auto write_manifest_files = [&](const DatasetManifest& manifest) {
    const fs::path csv = dataset_dir / "manifest.csv";
    write_manifest(csv.string(), manifest);
    note(csv);
    note(dataset_dir / "manifest.json");
  };

  if (task == "segmentation" || task == "segmentation_population") {
    SegTruth truth;
    std::vector<std::map<std::string, BinaryMask>> submissions;
    std::vector<std::string> submission_ids;
    ordered_json summary_extra;
    if (task == "segmentation") {
      truth = gen_segmentation_truth(config);
      const auto amounts = sweep_amounts(doc, config, n_submissions, config_path);
      auto population = perturb_population(truth, config, amounts);
      ordered_json achieved = ordered_json::array();
      for (std::size_t s = 0; s < population.size(); ++s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "sub_%03zu", s + 1);
        submission_ids.emplace_back(buf);
        ordered_json o;
        o["submission_id"] = submission_ids.back();
        o["amount"] = amounts[s];
        o["mean_achieved_jaccard"] =
            compensated_mean(population[s].achieved_jaccard);
        achieved.push_back(std::move(o));
        submissions.push_back(std::move(population[s].masks));
      }
      summary_extra["submissions"] = std::move(achieved);
    } else {
      FailureMode mode = FailureMode::NEAR_MISS;
      if (doc.contains("failure_mode")) {
        const std::string m = doc["failure_mode"].get<std::string>();
        if (m == "binary")
          mode = FailureMode::BINARY;
        else if (m == "near_miss")
          mode = FailureMode::NEAR_MISS;
        else
          throw BenchError(errc::kParseError,
                           config_path + ": unknown failure_mode '" + m + "'");
      }
      double max_failure_rate = 0.5;
      if (doc.contains("max_failure_rate")) {
        max_failure_rate = doc["max_failure_rate"].get<double>();
      }
      SegPopulation population =
          gen_segmentation_population(config, n_submissions, mode,
                                      max_failure_rate);
      truth.manifest = std::move(population.manifest);
      truth.masks = std::move(population.truth);
      submission_ids = std::move(population.submission_ids);
      submissions = std::move(population.submissions);
    }

    write_manifest_files(truth.manifest);
    for (const auto& entry : truth.manifest.entries) {
      const fs::path p = dataset_dir / entry.mask_path;
      write_mask_png(p.string(), truth.masks.at(entry.image_id));
      note(p);
    }
    for (std::size_t s = 0; s < submissions.size(); ++s) {
      const fs::path sub_dir = subs_dir / submission_ids[s];
      fs::create_directories(sub_dir);
      for (const auto& [id, mask] : submissions[s]) {
        const fs::path p = sub_dir / (id + "_segmentation.png");
        write_mask_png(p.string(), mask);
      }
      note(sub_dir);
    }

    ordered_json summary;
    summary["schema_version"] = 1;
    summary["task"] = task;
    summary["seed"] = config.seed;
    summary["n_images"] = truth.manifest.size();
    summary["n_submissions"] = submissions.size();
    for (auto& [key, value] : summary_extra.items()) summary[key] = value;
    const fs::path sp = root / "summary.json";
    write_file_bytes(sp.string(), canonical_json(summary));
    note(sp);
    return out;
  }

  if (task == "attributes") {
    std::vector<std::string> names = {"pigment_network", "negative_network",
                                      "streaks", "milia_like_cyst", "globules"};
    if (doc.contains("attribute_names")) {
      names.clear();
      for (const auto& n : doc["attribute_names"]) {
        names.push_back(n.get<std::string>());
      }
    }
    const AttrTruth truth = gen_attribute_truth(config, names);
    write_manifest_files(truth.manifest);
    for (const auto& [key, mask] : truth.masks) {
      const fs::path p =
          masks_dir / (key.first + "_attr_" + key.second + ".png");
      write_mask_png(p.string(), mask);
      note(p);
    }

    const auto amounts = sweep_amounts(doc, config, n_submissions, config_path);
    const auto population = gen_attribute_submissions(truth, config, amounts);
    for (std::size_t s = 0; s < n_submissions; ++s) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "sub_%03zu", s + 1);
      const fs::path sub_dir = subs_dir / buf;
      fs::create_directories(sub_dir);
      for (const auto& [key, mask] : population[s]) {
        const fs::path p =
            sub_dir / (key.first + "_attribute_" + key.second + ".png");
        write_mask_png(p.string(), mask);
      }
      note(sub_dir);
    }

    ordered_json summary;
    summary["schema_version"] = 1;
    summary["task"] = task;
    summary["seed"] = config.seed;
    summary["n_images"] = truth.manifest.size();
    summary["n_submissions"] = n_submissions;
    summary["attribute_names"] = names;
    const fs::path sp = root / "summary.json";
    write_file_bytes(sp.string(), canonical_json(summary));
    note(sp);
    return out;
  }

  if (task == "classification") {
    const ClsPopulation population =
        gen_classification_population(config, n_submissions);
    write_manifest_files(population.manifest);
    for (std::size_t s = 0; s < population.submissions.size(); ++s) {
      const fs::path p = subs_dir / (population.submission_ids[s] + ".csv");
      write_classification_csv(p.string(), population.submissions[s]);
      note(p);
    }
    ordered_json summary;
    summary["schema_version"] = 1;
    summary["task"] = task;
    summary["seed"] = config.seed;
    summary["n_images"] = population.manifest.size();
    summary["n_submissions"] = population.submissions.size();
    summary["internal"] = population.manifest.partition_count(Partition::INTERNAL);
    summary["external"] = population.manifest.partition_count(Partition::EXTERNAL);
    const fs::path sp = root / "summary.json";
    write_file_bytes(sp.string(), canonical_json(summary));
    note(sp);
    return out;
  }

  throw BenchError(errc::kParseError,
                   config_path + ": unknown task '" + task + "'");
}

}  // namespace lesionbench
