#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lesionbench/core.hpp"
#include "lesionbench/png_io.hpp"

namespace lesionbench {

// One submission's payload, validated against a manifest before scoring.
// warnings carries non-fatal findings (UnexpectedFile, ...).
struct SubmissionBundle {
  std::string submission_id;
  Task task = Task::SEGMENTATION;
  std::map<std::string, BinaryMask> seg_masks;
  std::map<std::pair<std::string, std::string>, BinaryMask> attr_masks;
  std::vector<PredictionRecord> predictions;
  std::vector<Flag> warnings;
};

// Loads and fully validates a manifest: a CSV (passed here) plus a required
// JSON sidecar at `<stem>.json` carrying schema_version, task and task
// metadata. Column layout per task:
//   segmentation:   image,mask,stratum
//   attributes:     image,<attribute name>...   (empty cell = absent)
//   classification: image,label,partition
// Entries come back sorted by image_id ascending; duplicate ids are
// rejected.
DatasetManifest load_manifest(const std::string& csv_path);

// Writes manifest CSV + sidecar with canonical formatting ("\n" endings,
// entries ascending). The synth pipeline and tests round-trip through this.
void write_manifest(const std::string& csv_path, const DatasetManifest& manifest);

// Decodes one mask image; binarization: gray value >= 128 is foreground.
inline BinaryMask load_mask(const std::string& path) {
  return decode_mask_png(path);
}

// Classification submission CSV with the byte-exact header
// `image,MEL,NV,BCC,AKIEC,BKL,DF,VASC`. Values must be decimals in [0, 1]
// (plain or scientific notation; locale separators rejected). Exactly one
// row per manifest id; extras and absences are collected and rejected.
// Records come back sorted by image_id ascending.
std::vector<PredictionRecord> parse_classification_csv(
    const std::string& path, const DatasetManifest& manifest);

void write_classification_csv(const std::string& path,
                              const std::vector<PredictionRecord>& records);

// Loads a segmentation submission directory: one `<image>_segmentation.png`
// per manifest id (pattern configurable via the sidecar). Missing files are
// fatal; unrelated files load with an UnexpectedFile warning. Decoding runs
// across workers; the result is order-independent.
SubmissionBundle load_segmentation_submission(const std::string& dir,
                                              const DatasetManifest& manifest);

// Same for attribute submissions: `<image>_attribute_<attribute>.png` per
// (image, attribute) pair. All-background masks are valid predictions.
SubmissionBundle load_attribute_submission(const std::string& dir,
                                           const DatasetManifest& manifest);

// Ground-truth mask loading for the scoring commands (paths resolve against
// the manifest's base_dir).
std::map<std::string, BinaryMask> load_ground_truth_masks(
    const DatasetManifest& manifest);
std::map<std::pair<std::string, std::string>, BinaryMask>
load_attribute_ground_truth(const DatasetManifest& manifest);

// FNV-1a 64-bit content digest of the manifest CSV + sidecar bytes, as a
// 16-digit hex string. Integrity diagnostic for reports, not a security
// feature.
std::string manifest_digest(const std::string& csv_path);

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace lesionbench
