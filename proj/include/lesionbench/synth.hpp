#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lesionbench/core.hpp"

namespace lesionbench {

enum class PerturbKind : int { DILATE = 0, ERODE, BOUNDARY_NOISE };

const char* to_string(PerturbKind k);
std::optional<PerturbKind> parse_perturb_kind(const std::string& name);

// Morphological radius (pixels) for DILATE/ERODE, displacement amplitude
// (pixels) for BOUNDARY_NOISE. amount 0 is the identity.
struct Perturbation {
  PerturbKind kind = PerturbKind::DILATE;
  double amount = 0.0;
};

// Everything the generators consume. (seed, config) fully determines every
// output byte; the PRNG contract lives in prng.hpp / docs/formats.md.
struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_images = 0;
  int image_size = 64;
  Perturbation perturbation;
  std::array<double, kNumClasses> class_priors = {
      1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7};
  double accuracy_knob = 1.0;       // [0, 1]
  double external_fraction = 0.25;  // [0, 1]
  double external_gap_knob = 0.0;   // [-1, 1]

  void validate() const;  // throws InvalidConfig
};

struct SegTruth {
  DatasetManifest manifest;  // mask paths filled as "masks/<id>.png"
  std::map<std::string, BinaryMask> masks;
};

struct AttrTruth {
  DatasetManifest manifest;
  std::map<std::pair<std::string, std::string>, BinaryMask> masks;
};

struct PerturbedSubmission {
  std::map<std::string, BinaryMask> masks;
  std::vector<double> achieved_jaccard;  // ascending image_id
};

struct ClsPopulation {
  DatasetManifest manifest;
  std::vector<std::string> submission_ids;
  std::vector<std::vector<PredictionRecord>> submissions;
};

enum class FailureMode : int { BINARY = 0, NEAR_MISS };

struct SegPopulation {
  DatasetManifest manifest;
  std::map<std::string, BinaryMask> truth;
  std::vector<std::string> submission_ids;
  std::vector<std::map<std::string, BinaryMask>> submissions;
};

// Smooth random blob masks (foreground fraction within [0.05, 0.6]), strata
// from a fixed categorical draw. Fully determined by config.seed.
SegTruth gen_segmentation_truth(const SynthConfig& config);

// Applies the configured perturbation to every truth mask and records the
// achieved per-image Jaccard distribution.
PerturbedSubmission perturb_submission(const SegTruth& truth,
                                       const SynthConfig& config);

// One perturbed submission per amount, each on an independent substream of
// config.seed (submission k is reproducible in isolation).
std::vector<PerturbedSubmission> perturb_population(
    const SegTruth& truth, const SynthConfig& config,
    const std::vector<double>& amounts);

// Attribute ground truth: per-(image, attribute) blobs with per-attribute
// presence rates; the last attribute is never present, so the
// AttributeAbsentEverywhere path stays exercised end to end.
AttrTruth gen_attribute_truth(const SynthConfig& config,
                              const std::vector<std::string>& attribute_names);

// Attribute submissions with detection behavior: a present attribute is
// found with probability accuracy_knob (found masks get the submission's
// perturbation, misses are all-background) and an absent one is
// hallucinated with probability 0.3 * (1 - accuracy_knob). Every
// (image, attribute) pair gets a mask. Submission k applies amounts[k] on
// its own substream.
std::vector<std::map<std::pair<std::string, std::string>, BinaryMask>>
gen_attribute_submissions(const AttrTruth& truth, const SynthConfig& config,
                          const std::vector<double>& amounts);

// Classification labels from class_priors, an exact round(n * fraction)
// external split, and n_submissions prediction sets. Each record either
// carries the true label mixed with noise (probability = the submission's
// effective accuracy level) or pure noise; external records use an accuracy
// level shifted down by the gap knob.
ClsPopulation gen_classification_population(const SynthConfig& config,
                                            std::size_t n_submissions);

// Segmentation populations with exactly controlled per-image Jaccard values
// (shifted-rectangle constructions): passing images score J = 1; failures
// score J = 0 (BINARY) or J = 0.6 (NEAR_MISS). Submission k's failure count
// is round(max_failure_rate * k / (n_submissions - 1) * n_images). These
// drive the failure-rate regression studies.
SegPopulation gen_segmentation_population(const SynthConfig& config,
                                          std::size_t n_submissions,
                                          FailureMode mode,
                                          double max_failure_rate = 0.5);

}  // namespace lesionbench
