#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lesionbench {

// The seven diagnosis classes, in the order used by every submission CSV
// column, confusion-matrix axis and report row. The order is part of the
// file-format contract and must not change.
enum class DiagnosisClass : int { MEL = 0, NV, BCC, AKIEC, BKL, DF, VASC };

inline constexpr int kNumClasses = 7;
inline constexpr std::array<const char*, kNumClasses> kClassNames = {
    "MEL", "NV", "BCC", "AKIEC", "BKL", "DF", "VASC"};

const char* to_string(DiagnosisClass c);
std::optional<DiagnosisClass> parse_class(const std::string& name);

// Disease strata for segmentation reporting. OTHER absorbs images outside
// the three named strata.
enum class SegStratum : int { MEL = 0, SEBK, NEVI, OTHER };

inline constexpr int kNumStrata = 4;
inline constexpr std::array<const char*, kNumStrata> kStratumNames = {
    "MEL", "SEBK", "NEVI", "OTHER"};

const char* to_string(SegStratum s);
std::optional<SegStratum> parse_stratum(const std::string& name);

enum class Partition : int { INTERNAL = 0, EXTERNAL };

inline constexpr std::array<const char*, 2> kPartitionNames = {"INTERNAL",
                                                               "EXTERNAL"};

const char* to_string(Partition p);
std::optional<Partition> parse_partition(const std::string& name);

enum class Task : int { SEGMENTATION = 0, ATTRIBUTES, CLASSIFICATION };

const char* to_string(Task t);
std::optional<Task> parse_task(const std::string& name);

// Rasterized lesion/attribute region. Row-major, 1 = foreground.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  static BinaryMask filled(int width, int height, bool value = false);

  bool at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool value) {
    bits[static_cast<std::size_t>(y) * width + x] = value ? 1 : 0;
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  std::size_t foreground_count() const;

  bool operator==(const BinaryMask&) const = default;
};

// Pixel confusion totals. Component-wise addition is associative and
// commutative, which is what makes dataset-level aggregation order-free.
struct PixelCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn_ = 0;  // false negatives; marker avoids keyword clashes
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn_ + tn; }

  PixelCounts& operator+=(const PixelCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn_ += o.fn_;
    tn += o.tn;
    return *this;
  }
  friend PixelCounts operator+(PixelCounts a, const PixelCounts& b) {
    return a += b;
  }

  bool operator==(const PixelCounts&) const = default;
};

// One image's probability vector over the seven classes, indexed by
// DiagnosisClass. Probabilities are not required to sum to 1.
struct PredictionRecord {
  std::string image_id;
  std::array<double, kNumClasses> probs{};

  bool operator==(const PredictionRecord&) const = default;
};

struct ManifestEntry {
  std::string image_id;
  // Segmentation: ground-truth mask path (relative to the manifest CSV).
  std::string mask_path;
  SegStratum stratum = SegStratum::OTHER;
  // Attributes: one path per manifest attribute name; "" means the attribute
  // is absent from the image (an all-background ground-truth mask).
  std::vector<std::string> attribute_mask_paths;
  // Classification:
  DiagnosisClass label = DiagnosisClass::MEL;
  Partition partition = Partition::INTERNAL;

  bool operator==(const ManifestEntry&) const = default;
};

// Ground-truth index for one task. Entries are kept sorted by image_id
// ascending; ids are unique.
struct DatasetManifest {
  Task task = Task::SEGMENTATION;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> attribute_names;  // attributes task only
  double threshold = 0.65;                   // segmentation sidecar value
  std::string base_dir;  // directory mask paths resolve against
  // Submission file naming, overridable via the manifest sidecar.
  std::string seg_name_pattern = "{image}_segmentation.png";
  std::string attr_name_pattern = "{image}_attribute_{attribute}.png";

  std::size_t size() const { return entries.size(); }
  const ManifestEntry* find(const std::string& image_id) const;
  std::size_t partition_count(Partition p) const;
  // Entries in ascending image_id order, the order every mean runs in.
  std::vector<const ManifestEntry*> sorted_entries() const;
};

// Diagnostic emitted during scoring (ties, degenerate cases, lenient
// validation findings). Never an error; always reported.
struct Flag {
  std::string code;
  std::string context;

  bool operator==(const Flag&) const = default;
};

// One submission's full metric bundle: the unit of ranking.
struct SubmissionScore {
  std::string submission_id;
  // image_id -> metric name -> value
  std::map<std::string, std::map<std::string, double>> per_image;
  std::map<std::string, double> aggregates;
  // stratum name -> metric name -> value
  std::map<std::string, std::map<std::string, double>> per_stratum;
  // partition name -> metric name -> value
  std::map<std::string, std::map<std::string, double>> per_partition;
  std::vector<Flag> flags;
};

// Canonical aggregate metric names shared by reports and the rank command.
namespace metric {
inline constexpr const char* kJaccard = "jaccard";
inline constexpr const char* kThresholdedJaccard = "thresholded_jaccard";
inline constexpr const char* kFailureRate = "failure_rate";
inline constexpr const char* kAccuracy = "acc";
inline constexpr const char* kBalancedAccuracy = "bacc";
inline constexpr const char* kMeanAuc = "mean_auc";
inline constexpr const char* kMeanAttributeJaccard = "mean_attribute_jaccard";

std::string auc_for(DiagnosisClass c);  // "auc_MEL", "auc_NV", ...
}  // namespace metric

}  // namespace lesionbench
