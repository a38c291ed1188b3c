#include "lesionbench/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lesionbench/errors.hpp"
#include "lesionbench/numeric.hpp"
#include "lesionbench/parallel.hpp"

namespace fs = std::filesystem;

namespace lesionbench {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string& line) {
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
  return fields;
}

// Lines with "\n" endings; a trailing "\r" (CRLF input) is stripped.
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw BenchError(errc::kIoError, "cannot open file: " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

double parse_probability(const std::string& field, const std::string& path,
                         std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value) || value < 0.0 ||
      value > 1.0) {
    std::ostringstream os;
    os << path << ":" << line_no << ": column " << column
       << ": value '" << field << "' is not a decimal in [0, 1]";
    throw BenchError(errc::kValueOutOfRange, os.str());
  }
  return value;
}

std::string sidecar_path(const std::string& csv_path) {
  fs::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

std::string expand_pattern(const std::string& pattern, const std::string& image,
                           const std::string& attribute = {}) {
  std::string out;
  out.reserve(pattern.size() + image.size());
  for (std::size_t i = 0; i < pattern.size();) {
    if (pattern.compare(i, 7, "{image}") == 0) {
      out += image;
      i += 7;
    } else if (pattern.compare(i, 11, "{attribute}") == 0) {
      out += attribute;
      i += 11;
    } else {
      out.push_back(pattern[i]);
      ++i;
    }
  }
  return out;
}

std::string join_limited(const std::vector<std::string>& items,
                         std::size_t limit = 10) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
    if (i) os << ", ";
    os << items[i];
  }
  if (items.size() > limit) os << ", ... (" << items.size() << " total)";
  return os.str();
}

}  // namespace

std::string read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw BenchError(errc::kIoError, "cannot open file: " + path);
  }
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw BenchError(errc::kIoError, "cannot write file: " + path);
  }
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) {
    throw BenchError(errc::kIoError, "short write on file: " + path);
  }
}

DatasetManifest load_manifest(const std::string& csv_path) {
  const std::string side_path = sidecar_path(csv_path);
  if (!fs::exists(side_path)) {
    throw BenchError(errc::kMissingField,
                     "manifest sidecar not found: " + side_path);
  }
  const auto sidecar = nlohmann::json::parse(read_file_bytes(side_path),
                                             nullptr, /*allow_exceptions=*/false);
  if (sidecar.is_discarded() || !sidecar.is_object()) {
    throw BenchError(errc::kParseError,
                     side_path + ": sidecar is not a JSON object");
  }
  if (!sidecar.contains("schema_version") ||
      !sidecar["schema_version"].is_number_integer()) {
    throw BenchError(errc::kMissingField,
                     side_path + ": missing integer field 'schema_version'");
  }
  if (sidecar["schema_version"].get<int>() != 1) {
    throw BenchError(errc::kParseError,
                     side_path + ": unsupported schema_version " +
                         sidecar["schema_version"].dump());
  }
  if (!sidecar.contains("task") || !sidecar["task"].is_string()) {
    throw BenchError(errc::kMissingField,
                     side_path + ": missing string field 'task'");
  }
  const auto task = parse_task(sidecar["task"].get<std::string>());
  if (!task) {
    throw BenchError(errc::kParseError,
                     side_path + ": unknown task '" +
                         sidecar["task"].get<std::string>() + "'");
  }

  DatasetManifest manifest;
  manifest.task = *task;
  manifest.base_dir = fs::path(csv_path).parent_path().string();

  if (manifest.task == Task::ATTRIBUTES) {
    if (!sidecar.contains("attribute_names") ||
        !sidecar["attribute_names"].is_array() ||
        sidecar["attribute_names"].empty()) {
      throw BenchError(errc::kMissingField,
                       side_path +
                           ": attributes task needs a non-empty "
                           "'attribute_names' array");
    }
    std::set<std::string> seen;
    for (const auto& name : sidecar["attribute_names"]) {
      if (!name.is_string() || name.get<std::string>().empty() ||
          name.get<std::string>().find(',') != std::string::npos) {
        throw BenchError(errc::kParseError,
                         side_path +
                             ": attribute names must be non-empty strings "
                             "without commas");
      }
      if (!seen.insert(name.get<std::string>()).second) {
        throw BenchError(errc::kParseError,
                         side_path + ": duplicate attribute name '" +
                             name.get<std::string>() + "'");
      }
      manifest.attribute_names.push_back(name.get<std::string>());
    }
  }
  if (sidecar.contains("threshold")) {
    if (!sidecar["threshold"].is_number()) {
      throw BenchError(errc::kParseError, side_path + ": 'threshold' must be a number");
    }
    manifest.threshold = sidecar["threshold"].get<double>();
    if (!(manifest.threshold > 0.0 && manifest.threshold < 1.0)) {
      throw BenchError(errc::kParseError,
                       side_path + ": 'threshold' must lie in (0, 1)");
    }
  }
  if (sidecar.contains("seg_name_pattern")) {
    manifest.seg_name_pattern = sidecar["seg_name_pattern"].get<std::string>();
  }
  if (sidecar.contains("attr_name_pattern")) {
    manifest.attr_name_pattern = sidecar["attr_name_pattern"].get<std::string>();
  }
  if (manifest.seg_name_pattern.find("{image}") == std::string::npos) {
    throw BenchError(errc::kParseError,
                     side_path + ": seg_name_pattern must contain {image}");
  }
  if (manifest.attr_name_pattern.find("{image}") == std::string::npos ||
      manifest.attr_name_pattern.find("{attribute}") == std::string::npos) {
    throw BenchError(errc::kParseError,
                     side_path +
                         ": attr_name_pattern must contain {image} and "
                         "{attribute}");
  }

  const std::vector<std::string> lines = read_lines(csv_path);
  if (lines.empty()) {
    throw BenchError(errc::kParseError, csv_path + ":1: missing header row");
  }
  std::string expected_header;
  switch (manifest.task) {
    case Task::SEGMENTATION: expected_header = "image,mask,stratum"; break;
    case Task::CLASSIFICATION: expected_header = "image,label,partition"; break;
    case Task::ATTRIBUTES: {
      expected_header = "image";
      for (const auto& a : manifest.attribute_names) expected_header += "," + a;
      break;
    }
  }
  if (lines[0] != expected_header) {
    throw BenchError(errc::kParseError, csv_path + ":1: header must be '" +
                                            expected_header + "', got '" +
                                            lines[0] + "'");
  }

  std::set<std::string> seen_ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;  // trailing newline
    const std::size_t line_no = i + 1;
    const auto fields = split_csv_line(lines[i]);
    const std::size_t expected_fields =
        manifest.task == Task::ATTRIBUTES ? 1 + manifest.attribute_names.size() : 3;
    if (fields.size() != expected_fields) {
      std::ostringstream os;
      os << csv_path << ":" << line_no << ": expected " << expected_fields
         << " fields, got " << fields.size();
      throw BenchError(errc::kParseError, os.str());
    }
    ManifestEntry entry;
    entry.image_id = fields[0];
    if (entry.image_id.empty()) {
      std::ostringstream os;
      os << csv_path << ":" << line_no << ": empty image id";
      throw BenchError(errc::kParseError, os.str());
    }
    if (!seen_ids.insert(entry.image_id).second) {
      throw BenchError(errc::kDuplicateImageId,
                       csv_path + ": duplicate image id '" + entry.image_id + "'");
    }
    switch (manifest.task) {
      case Task::SEGMENTATION: {
        entry.mask_path = fields[1];
        if (entry.mask_path.empty()) {
          std::ostringstream os;
          os << csv_path << ":" << line_no << ": empty mask path";
          throw BenchError(errc::kMissingField, os.str());
        }
        const auto stratum = parse_stratum(fields[2]);
        if (!stratum) {
          std::ostringstream os;
          os << csv_path << ":" << line_no << ": unknown stratum '" << fields[2]
             << "'";
          throw BenchError(errc::kParseError, os.str());
        }
        entry.stratum = *stratum;
        break;
      }
      case Task::ATTRIBUTES: {
        entry.attribute_mask_paths.assign(fields.begin() + 1, fields.end());
        break;
      }
      case Task::CLASSIFICATION: {
        const auto label = parse_class(fields[1]);
        if (!label) {
          std::ostringstream os;
          os << csv_path << ":" << line_no << ": unknown label '" << fields[1]
             << "'";
          throw BenchError(errc::kParseError, os.str());
        }
        const auto partition = parse_partition(fields[2]);
        if (!partition) {
          std::ostringstream os;
          os << csv_path << ":" << line_no << ": unknown partition '"
             << fields[2] << "'";
          throw BenchError(errc::kParseError, os.str());
        }
        entry.label = *label;
        entry.partition = *partition;
        break;
      }
    }
    manifest.entries.push_back(std::move(entry));
  }

  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) {
              return a.image_id < b.image_id;
            });
  return manifest;
}

void write_manifest(const std::string& csv_path, const DatasetManifest& manifest) {
  std::vector<const ManifestEntry*> sorted;
  sorted.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const ManifestEntry* a, const ManifestEntry* b) {
              return a->image_id < b->image_id;
            });

  std::ostringstream csv;
  switch (manifest.task) {
    case Task::SEGMENTATION: {
      csv << "image,mask,stratum\n";
      for (const auto* e : sorted) {
        csv << e->image_id << "," << e->mask_path << "," << to_string(e->stratum)
            << "\n";
      }
      break;
    }
    case Task::ATTRIBUTES: {
      csv << "image";
      for (const auto& a : manifest.attribute_names) csv << "," << a;
      csv << "\n";
      for (const auto* e : sorted) {
        csv << e->image_id;
        for (const auto& p : e->attribute_mask_paths) csv << "," << p;
        csv << "\n";
      }
      break;
    }
    case Task::CLASSIFICATION: {
      csv << "image,label,partition\n";
      for (const auto* e : sorted) {
        csv << e->image_id << "," << to_string(e->label) << ","
            << to_string(e->partition) << "\n";
      }
      break;
    }
  }
  write_file_bytes(csv_path, csv.str());

  ordered_json sidecar;
  sidecar["schema_version"] = 1;
  sidecar["task"] = to_string(manifest.task);
  if (manifest.task == Task::ATTRIBUTES) {
    sidecar["attribute_names"] = manifest.attribute_names;
  }
  if (manifest.task == Task::SEGMENTATION) {
    sidecar["threshold"] = manifest.threshold;
    sidecar["seg_name_pattern"] = manifest.seg_name_pattern;
  }
  if (manifest.task == Task::ATTRIBUTES) {
    sidecar["attr_name_pattern"] = manifest.attr_name_pattern;
  }
  write_file_bytes(sidecar_path(csv_path), sidecar.dump(2) + "\n");
}

std::vector<PredictionRecord> parse_classification_csv(
    const std::string& path, const DatasetManifest& manifest) {
  static const std::string kHeader = "image,MEL,NV,BCC,AKIEC,BKL,DF,VASC";
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines[0] != kHeader) {
    throw BenchError(errc::kHeaderMismatch,
                     path + ":1: header must be exactly '" + kHeader + "'");
  }

  std::map<std::string, PredictionRecord> by_id;
  std::vector<std::string> extra;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    const std::size_t line_no = i + 1;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 1 + kNumClasses) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected " << (1 + kNumClasses)
         << " fields, got " << fields.size();
      throw BenchError(errc::kParseError, os.str());
    }
    PredictionRecord rec;
    rec.image_id = fields[0];
    for (int c = 0; c < kNumClasses; ++c) {
      rec.probs[c] = parse_probability(fields[c + 1], path, line_no,
                                       kClassNames[c]);
    }
    if (by_id.count(rec.image_id)) {
      throw BenchError(errc::kDuplicateImageId,
                       path + ": duplicate row for image '" + rec.image_id + "'");
    }
    if (!manifest.find(rec.image_id)) {
      extra.push_back(rec.image_id);
    }
    by_id.emplace(rec.image_id, std::move(rec));
  }
  if (!extra.empty()) {
    throw BenchError(errc::kExtraRows,
                     path + ": rows for unknown image(s): " + join_limited(extra));
  }
  std::vector<std::string> missing;
  for (const auto& entry : manifest.entries) {
    if (!by_id.count(entry.image_id)) missing.push_back(entry.image_id);
  }
  if (!missing.empty()) {
    throw BenchError(errc::kMissingRows,
                     path + ": missing rows for image(s): " + join_limited(missing));
  }

  std::vector<PredictionRecord> records;
  records.reserve(by_id.size());
  for (auto& [id, rec] : by_id) records.push_back(std::move(rec));
  return records;
}

void write_classification_csv(const std::string& path,
                              const std::vector<PredictionRecord>& records) {
  std::ostringstream os;
  os << "image,MEL,NV,BCC,AKIEC,BKL,DF,VASC\n";
  for (const auto& rec : records) {
    os << rec.image_id;
    for (int c = 0; c < kNumClasses; ++c) os << "," << shortest_double(rec.probs[c]);
    os << "\n";
  }
  write_file_bytes(path, os.str());
}

namespace {

// Shared mask-directory loader; fills `out` keyed by expected file name.
std::map<std::string, BinaryMask> load_mask_dir(
    const std::string& dir, const std::vector<std::string>& names) {
  if (!fs::is_directory(dir)) {
    throw BenchError(errc::kIoError, "not a directory: " + dir);
  }
  std::vector<std::string> missing;
  for (const auto& name : names) {
    if (!fs::exists(fs::path(dir) / name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    throw BenchError(errc::kMissingPrediction,
                     dir + ": missing prediction file(s): " + join_limited(missing));
  }
  std::vector<BinaryMask> masks(names.size());
  parallel_for(names.size(), [&](std::size_t i) {
    masks[i] = decode_mask_png((fs::path(dir) / names[i]).string());
  });
  std::map<std::string, BinaryMask> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out.emplace(names[i], std::move(masks[i]));
  }
  return out;
}

std::vector<Flag> scan_unexpected(const std::string& dir,
                                  const std::set<std::string>& expected) {
  std::vector<std::string> strays;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (!expected.count(name)) strays.push_back(name);
  }
  std::sort(strays.begin(), strays.end());
  std::vector<Flag> warnings;
  for (const auto& s : strays) warnings.push_back({"UnexpectedFile", s});
  return warnings;
}

}  // namespace

SubmissionBundle load_segmentation_submission(const std::string& dir,
                                              const DatasetManifest& manifest) {
  SubmissionBundle bundle;
  bundle.task = Task::SEGMENTATION;
  bundle.submission_id = fs::path(dir).filename().string();

  std::vector<std::string> names;
  names.reserve(manifest.size());
  for (const auto& entry : manifest.entries) {
    names.push_back(expand_pattern(manifest.seg_name_pattern, entry.image_id));
  }
  auto by_name = load_mask_dir(dir, names);
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    bundle.seg_masks.emplace(manifest.entries[i].image_id,
                             std::move(by_name.at(names[i])));
  }
  bundle.warnings = scan_unexpected(dir, {names.begin(), names.end()});
  return bundle;
}

SubmissionBundle load_attribute_submission(const std::string& dir,
                                           const DatasetManifest& manifest) {
  SubmissionBundle bundle;
  bundle.task = Task::ATTRIBUTES;
  bundle.submission_id = fs::path(dir).filename().string();

  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& entry : manifest.entries) {
    for (const auto& attr : manifest.attribute_names) {
      names.push_back(
          expand_pattern(manifest.attr_name_pattern, entry.image_id, attr));
      keys.emplace_back(entry.image_id, attr);
    }
  }
  auto by_name = load_mask_dir(dir, names);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    bundle.attr_masks.emplace(keys[i], std::move(by_name.at(names[i])));
  }
  bundle.warnings = scan_unexpected(dir, {names.begin(), names.end()});
  return bundle;
}

std::map<std::string, BinaryMask> load_ground_truth_masks(
    const DatasetManifest& manifest) {
  std::vector<BinaryMask> masks(manifest.size());
  parallel_for(manifest.size(), [&](std::size_t i) {
    const fs::path p = fs::path(manifest.base_dir) / manifest.entries[i].mask_path;
    masks[i] = decode_mask_png(p.string());
  });
  std::map<std::string, BinaryMask> out;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    out.emplace(manifest.entries[i].image_id, std::move(masks[i]));
  }
  return out;
}

std::map<std::pair<std::string, std::string>, BinaryMask>
load_attribute_ground_truth(const DatasetManifest& manifest) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::vector<std::string> paths;
  for (const auto& entry : manifest.entries) {
    for (std::size_t a = 0; a < manifest.attribute_names.size(); ++a) {
      const std::string& rel = entry.attribute_mask_paths.at(a);
      if (rel.empty()) continue;  // absent attribute: all-background
      keys.emplace_back(entry.image_id, manifest.attribute_names[a]);
      paths.push_back((fs::path(manifest.base_dir) / rel).string());
    }
  }
  std::vector<BinaryMask> masks(paths.size());
  parallel_for(paths.size(),
               [&](std::size_t i) { masks[i] = decode_mask_png(paths[i]); });
  std::map<std::pair<std::string, std::string>, BinaryMask> out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    out.emplace(keys[i], std::move(masks[i]));
  }
  return out;
}

std::string manifest_digest(const std::string& csv_path) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto mix = [&h](const std::string& bytes) {
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001B3ull;
    }
  };
  mix(read_file_bytes(csv_path));
  mix(read_file_bytes(sidecar_path(csv_path)));
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

}  // namespace lesionbench
