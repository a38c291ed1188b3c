#include "lesionbench/core.hpp"

#include <algorithm>

namespace lesionbench {

const char* to_string(DiagnosisClass c) {
  return kClassNames[static_cast<int>(c)];
}

std::optional<DiagnosisClass> parse_class(const std::string& name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (name == kClassNames[i]) return static_cast<DiagnosisClass>(i);
  }
  return std::nullopt;
}

const char* to_string(SegStratum s) { return kStratumNames[static_cast<int>(s)]; }

std::optional<SegStratum> parse_stratum(const std::string& name) {
  for (int i = 0; i < kNumStrata; ++i) {
    if (name == kStratumNames[i]) return static_cast<SegStratum>(i);
  }
  return std::nullopt;
}

const char* to_string(Partition p) {
  return kPartitionNames[static_cast<int>(p)];
}

std::optional<Partition> parse_partition(const std::string& name) {
  if (name == kPartitionNames[0]) return Partition::INTERNAL;
  if (name == kPartitionNames[1]) return Partition::EXTERNAL;
  return std::nullopt;
}

const char* to_string(Task t) {
  switch (t) {
    case Task::SEGMENTATION: return "segmentation";
    case Task::ATTRIBUTES: return "attributes";
    case Task::CLASSIFICATION: return "classification";
  }
  return "unknown";
}

std::optional<Task> parse_task(const std::string& name) {
  if (name == "segmentation") return Task::SEGMENTATION;
  if (name == "attributes") return Task::ATTRIBUTES;
  if (name == "classification") return Task::CLASSIFICATION;
  return std::nullopt;
}

BinaryMask BinaryMask::filled(int width, int height, bool value) {
  BinaryMask m;
  m.width = width;
  m.height = height;
  m.bits.assign(static_cast<std::size_t>(width) * height, value ? 1 : 0);
  return m;
}

std::size_t BinaryMask::foreground_count() const {
  return static_cast<std::size_t>(
      std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

const ManifestEntry* DatasetManifest::find(const std::string& image_id) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), image_id,
      [](const ManifestEntry& e, const std::string& id) { return e.image_id < id; });
  if (it != entries.end() && it->image_id == image_id) return &*it;
  // Entries are normally sorted; scan in case a caller built them by hand.
  for (const auto& e : entries) {
    if (e.image_id == image_id) return &e;
  }
  return nullptr;
}

std::size_t DatasetManifest::partition_count(Partition p) const {
  std::size_t n = 0;
  for (const auto& e : entries) {
    if (e.partition == p) ++n;
  }
  return n;
}

std::vector<const ManifestEntry*> DatasetManifest::sorted_entries() const {
  std::vector<const ManifestEntry*> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(&e);
  std::sort(out.begin(), out.end(),
            [](const ManifestEntry* a, const ManifestEntry* b) {
              return a->image_id < b->image_id;
            });
  return out;
}

namespace metric {
std::string auc_for(DiagnosisClass c) {
  return std::string("auc_") + to_string(c);
}
}  // namespace metric

}  // namespace lesionbench
