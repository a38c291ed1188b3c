#include "lesionbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lesionbench/errors.hpp"
#include "lesionbench/mask_metrics.hpp"
#include "lesionbench/prng.hpp"

namespace lesionbench {

namespace {

// Fixed substream labels; changing any value changes every published fixture.
enum StreamLabel : std::uint64_t {
  kShapeStream = 1,
  kStrataStream = 2,
  kLabelStream = 3,
  kPartitionStream = 4,
  kAttrStream = 5,
  kPerturbStream = 6,
  kSubmissionStreamBase = 1000,
};

std::string image_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%06zu", index + 1);
  return buf;
}

std::string submission_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sub_%03zu", index + 1);
  return buf;
}

// Rotated superellipse blob. Deliberately restricted to IEEE-exact
// operations (+, -, *, /, sqrt): no libm transcendentals, so the same seed
// produces the same bits on every platform.
BinaryMask gen_blob(SplitMix64& rng, int size, double frac_lo, double frac_hi,
                    double frac_min, double frac_max) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double cx = size * (0.5 + 0.2 * (rng.next_double() - 0.5));
    const double cy = size * (0.5 + 0.2 * (rng.next_double() - 0.5));
    const double frac_target = rng.next_in(frac_lo, frac_hi);
    const double aspect = rng.next_in(0.7, 1.4);
    // Unit direction without trig: rejection-sample a vector in the disk.
    double ux = 0.0, uy = 0.0, norm2 = 0.0;
    do {
      ux = rng.next_in(-1.0, 1.0);
      uy = rng.next_in(-1.0, 1.0);
      norm2 = ux * ux + uy * uy;
    } while (norm2 < 1e-6 || norm2 > 1.0);
    const double inv = 1.0 / std::sqrt(norm2);
    const double rot_c = ux * inv;
    const double rot_s = uy * inv;
    const bool quartic = rng.next_bernoulli(0.35);

    // Area of the superellipse: pi*a*b (p=2) or ~3.7*a*b (p=4); solve a*b
    // from the target fraction.
    const double area_coeff = quartic ? 3.7081493546 : 3.14159265358979323846;
    const double ab = frac_target * size * size / area_coeff;
    const double a = std::sqrt(ab * aspect);
    const double b = std::sqrt(ab / aspect);

    BinaryMask mask = BinaryMask::filled(size, size, false);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double dx = (x + 0.5) - cx;
        const double dy = (y + 0.5) - cy;
        const double rx = (rot_c * dx + rot_s * dy) / a;
        const double ry = (-rot_s * dx + rot_c * dy) / b;
        const double q2 = rx * rx + ry * ry;
        const double val = quartic ? rx * rx * rx * rx + ry * ry * ry * ry : q2;
        if (val <= 1.0) mask.set(x, y, true);
      }
    }
    const double frac = static_cast<double>(mask.foreground_count()) /
                        static_cast<double>(mask.pixel_count());
    if (frac >= frac_min && frac <= frac_max) return mask;
  }
  throw BenchError(errc::kInvalidConfig,
                   "mask generation failed to hit the foreground-fraction "
                   "window; image_size too small?");
}

constexpr double kEdtInf = 1e30;

// Felzenszwalb-Huttenlocher 1D squared distance transform.
void edt_1d(const std::vector<double>& f, std::size_t n, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kEdtInf;
  z[1] = kEdtInf;
  for (int q = 1; q < static_cast<int>(n); ++q) {
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) -
           (f[p] + static_cast<double>(p) * p)) /
          (2.0 * q - 2.0 * p);
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kEdtInf;
  }
  k = 0;
  for (int q = 0; q < static_cast<int>(n); ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d[q] = static_cast<double>(q - p) * (q - p) + f[p];
  }
}

// Squared Euclidean distance from every pixel to the nearest pixel where
// `to_foreground` matches the mask value. kEdtInf when no such pixel exists.
std::vector<double> edt_squared(const BinaryMask& m, bool to_foreground) {
  const int w = m.width, h = m.height;
  std::vector<double> grid(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      grid[static_cast<std::size_t>(y) * w + x] =
          m.at(x, y) == to_foreground ? 0.0 : kEdtInf;

  const std::size_t dim = static_cast<std::size_t>(std::max(w, h));
  std::vector<double> f(dim), d(dim), z(dim + 1);
  std::vector<int> v(dim);
  for (int x = 0; x < w; ++x) {  // columns
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, static_cast<std::size_t>(h), d, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {  // rows
    for (int x = 0; x < w; ++x) f[x] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, static_cast<std::size_t>(w), d, v, z);
    for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = d[x];
  }
  return grid;
}

BinaryMask dilate(const BinaryMask& m, double radius) {
  if (m.foreground_count() == 0) return m;
  const std::vector<double> dist2 = edt_squared(m, true);
  BinaryMask out = BinaryMask::filled(m.width, m.height, false);
  for (std::size_t i = 0; i < dist2.size(); ++i) {
    out.bits[i] = dist2[i] <= radius * radius ? 1 : 0;
  }
  return out;
}

BinaryMask erode(const BinaryMask& m, double radius) {
  if (m.foreground_count() == m.pixel_count()) return m;
  const std::vector<double> dist2 = edt_squared(m, false);
  BinaryMask out = BinaryMask::filled(m.width, m.height, false);
  for (std::size_t i = 0; i < dist2.size(); ++i) {
    out.bits[i] = (m.bits[i] != 0 && dist2[i] > radius * radius) ? 1 : 0;
  }
  return out;
}

// Smooth noise in [-amplitude, amplitude]: bilinear interpolation of a
// coarse uniform grid (cell size 8 px).
BinaryMask displace_boundary(const BinaryMask& m, double amplitude,
                             SplitMix64& rng) {
  const int w = m.width, h = m.height;
  const int cell = 8;
  const int gw = w / cell + 2, gh = h / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  for (double& g : grid) g = rng.next_in(-1.0, 1.0);

  const std::vector<double> d_fg = edt_squared(m, true);
  const std::vector<double> d_bg = edt_squared(m, false);

  BinaryMask out = BinaryMask::filled(w, h, false);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = static_cast<double>(x) / cell;
      const double gy = static_cast<double>(y) / cell;
      const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
      const double tx = gx - ix, ty = gy - iy;
      const auto at = [&](int cx, int cy) {
        return grid[static_cast<std::size_t>(cy) * gw + cx];
      };
      const double noise =
          amplitude * ((1 - tx) * (1 - ty) * at(ix, iy) +
                       tx * (1 - ty) * at(ix + 1, iy) +
                       (1 - tx) * ty * at(ix, iy + 1) +
                       tx * ty * at(ix + 1, iy + 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      // Signed distance: positive inside the region, negative outside.
      const double signed_d =
          m.bits[i] != 0 ? std::sqrt(d_bg[i]) : -std::sqrt(d_fg[i]);
      out.bits[i] = signed_d + noise > 0.0 ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

const char* to_string(PerturbKind k) {
  switch (k) {
    case PerturbKind::DILATE: return "dilate";
    case PerturbKind::ERODE: return "erode";
    case PerturbKind::BOUNDARY_NOISE: return "boundary_noise";
  }
  return "unknown";
}

std::optional<PerturbKind> parse_perturb_kind(const std::string& name) {
  if (name == "dilate") return PerturbKind::DILATE;
  if (name == "erode") return PerturbKind::ERODE;
  if (name == "boundary_noise") return PerturbKind::BOUNDARY_NOISE;
  return std::nullopt;
}

void SynthConfig::validate() const {
  if (image_size < 8 || image_size > 4096) {
    throw BenchError(errc::kInvalidConfig,
                     "image_size must lie in [8, 4096], got " +
                         std::to_string(image_size));
  }
  if (!(perturbation.amount >= 0.0) || !std::isfinite(perturbation.amount)) {
    throw BenchError(errc::kInvalidConfig, "perturbation amount must be >= 0");
  }
  double sum = 0.0;
  for (double p : class_priors) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw BenchError(errc::kInvalidConfig, "class priors must be >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw BenchError(errc::kInvalidConfig,
                     "class priors must sum to 1 (got " + std::to_string(sum) + ")");
  }
  if (!(accuracy_knob >= 0.0 && accuracy_knob <= 1.0)) {
    throw BenchError(errc::kInvalidConfig, "accuracy_knob must lie in [0, 1]");
  }
  if (!(external_fraction >= 0.0 && external_fraction <= 1.0)) {
    throw BenchError(errc::kInvalidConfig, "external_fraction must lie in [0, 1]");
  }
  if (!(external_gap_knob >= -1.0 && external_gap_knob <= 1.0)) {
    throw BenchError(errc::kInvalidConfig, "external_gap_knob must lie in [-1, 1]");
  }
}

SegTruth gen_segmentation_truth(const SynthConfig& config) {
  config.validate();
  SegTruth truth;
  truth.manifest.task = Task::SEGMENTATION;
  truth.manifest.threshold = 0.65;

  SplitMix64 shape_rng(derive_stream_seed(config.seed, kShapeStream));
  SplitMix64 strata_rng(derive_stream_seed(config.seed, kStrataStream));
  for (std::size_t i = 0; i < config.n_images; ++i) {
    const std::string id = image_id_for(i);
    BinaryMask mask =
        gen_blob(shape_rng, config.image_size, 0.10, 0.45, 0.05, 0.6);

    const double u = strata_rng.next_double();
    SegStratum stratum = SegStratum::OTHER;
    if (u < 0.20)
      stratum = SegStratum::MEL;
    else if (u < 0.35)
      stratum = SegStratum::SEBK;
    else if (u < 0.80)
      stratum = SegStratum::NEVI;

    ManifestEntry entry;
    entry.image_id = id;
    entry.mask_path = "masks/" + id + ".png";
    entry.stratum = stratum;
    truth.manifest.entries.push_back(std::move(entry));
    truth.masks.emplace(id, std::move(mask));
  }
  return truth;
}

PerturbedSubmission perturb_submission(const SegTruth& truth,
                                       const SynthConfig& config) {
  config.validate();
  SplitMix64 rng(derive_stream_seed(config.seed, kPerturbStream));
  PerturbedSubmission result;
  for (const auto& entry : truth.manifest.entries) {
    const BinaryMask& gt = truth.masks.at(entry.image_id);
    BinaryMask pred;
    switch (config.perturbation.kind) {
      case PerturbKind::DILATE:
        pred = dilate(gt, config.perturbation.amount);
        break;
      case PerturbKind::ERODE:
        pred = erode(gt, config.perturbation.amount);
        break;
      case PerturbKind::BOUNDARY_NOISE:
        pred = displace_boundary(gt, config.perturbation.amount, rng);
        break;
    }
    result.achieved_jaccard.push_back(jaccard(confusion_counts(pred, gt)));
    result.masks.emplace(entry.image_id, std::move(pred));
  }
  return result;
}

std::vector<PerturbedSubmission> perturb_population(
    const SegTruth& truth, const SynthConfig& config,
    const std::vector<double>& amounts) {
  config.validate();
  std::vector<PerturbedSubmission> population;
  population.reserve(amounts.size());
  for (std::size_t s = 0; s < amounts.size(); ++s) {
    SynthConfig sub = config;
    sub.seed = derive_stream_seed(config.seed, kSubmissionStreamBase + s);
    sub.perturbation.amount = amounts[s];
    population.push_back(perturb_submission(truth, sub));
  }
  return population;
}

AttrTruth gen_attribute_truth(const SynthConfig& config,
                              const std::vector<std::string>& attribute_names) {
  config.validate();
  if (attribute_names.empty()) {
    throw BenchError(errc::kInvalidConfig,
                     "attribute generation needs at least one attribute name");
  }
  AttrTruth truth;
  truth.manifest.task = Task::ATTRIBUTES;
  truth.manifest.attribute_names = attribute_names;

  SplitMix64 rng(derive_stream_seed(config.seed, kAttrStream));
  for (std::size_t i = 0; i < config.n_images; ++i) {
    const std::string id = image_id_for(i);
    ManifestEntry entry;
    entry.image_id = id;
    for (std::size_t a = 0; a < attribute_names.size(); ++a) {
      // Decaying presence rates; the last attribute never occurs so the
      // absent-everywhere path stays covered.
      double presence = std::max(0.15, 0.7 - 0.15 * static_cast<double>(a));
      if (a + 1 == attribute_names.size()) presence = 0.0;
      const bool present = rng.next_bernoulli(presence);
      if (present) {
        BinaryMask mask =
            gen_blob(rng, config.image_size, 0.03, 0.15, 0.01, 0.3);
        entry.attribute_mask_paths.push_back("masks/" + id + "_attr_" +
                                             attribute_names[a] + ".png");
        truth.masks.emplace(std::make_pair(id, attribute_names[a]),
                            std::move(mask));
      } else {
        entry.attribute_mask_paths.emplace_back();
      }
    }
    truth.manifest.entries.push_back(std::move(entry));
  }
  return truth;
}

std::vector<std::map<std::pair<std::string, std::string>, BinaryMask>>
gen_attribute_submissions(const AttrTruth& truth, const SynthConfig& config,
                          const std::vector<double>& amounts) {
  config.validate();
  const double detect_rate = config.accuracy_knob;
  const double hallucinate_rate = 0.3 * (1.0 - config.accuracy_knob);
  const BinaryMask empty =
      BinaryMask::filled(config.image_size, config.image_size, false);

  std::vector<std::map<std::pair<std::string, std::string>, BinaryMask>> out;
  out.reserve(amounts.size());
  for (std::size_t s = 0; s < amounts.size(); ++s) {
    const std::uint64_t sub_seed =
        derive_stream_seed(config.seed, kSubmissionStreamBase + s);
    SplitMix64 rng(derive_stream_seed(sub_seed, kAttrStream));

    // Flatten the present masks so the perturbation machinery applies.
    SegTruth view;
    view.manifest.task = Task::SEGMENTATION;
    for (const auto& [key, mask] : truth.masks) {
      ManifestEntry e;
      e.image_id = key.first + "/" + key.second;
      view.manifest.entries.push_back(e);
      view.masks.emplace(e.image_id, mask);
    }
    SynthConfig sub = config;
    sub.seed = sub_seed;
    sub.perturbation.amount = amounts[s];
    const PerturbedSubmission perturbed = perturb_submission(view, sub);

    std::map<std::pair<std::string, std::string>, BinaryMask> masks;
    for (const auto& entry : truth.manifest.entries) {
      for (const auto& attr : truth.manifest.attribute_names) {
        const auto key = std::make_pair(entry.image_id, attr);
        const bool present = truth.masks.count(key) != 0;
        if (present) {
          if (rng.next_bernoulli(detect_rate)) {
            masks.emplace(key,
                          perturbed.masks.at(entry.image_id + "/" + attr));
          } else {
            masks.emplace(key, empty);  // missed detection
          }
        } else if (rng.next_bernoulli(hallucinate_rate)) {
          masks.emplace(key, gen_blob(rng, config.image_size, 0.03, 0.15,
                                      0.01, 0.3));
        } else {
          masks.emplace(key, empty);
        }
      }
    }
    out.push_back(std::move(masks));
  }
  return out;
}

ClsPopulation gen_classification_population(const SynthConfig& config,
                                            std::size_t n_submissions) {
  config.validate();
  ClsPopulation population;
  population.manifest.task = Task::CLASSIFICATION;

  SplitMix64 label_rng(derive_stream_seed(config.seed, kLabelStream));
  for (std::size_t i = 0; i < config.n_images; ++i) {
    ManifestEntry entry;
    entry.image_id = image_id_for(i);
    const double u = label_rng.next_double();
    double cum = 0.0;
    entry.label = static_cast<DiagnosisClass>(kNumClasses - 1);
    for (int c = 0; c < kNumClasses; ++c) {
      cum += config.class_priors[c];
      if (u < cum) {
        entry.label = static_cast<DiagnosisClass>(c);
        break;
      }
    }
    entry.partition = Partition::INTERNAL;
    population.manifest.entries.push_back(std::move(entry));
  }

  // Exact external count via a Fisher-Yates draw.
  SplitMix64 part_rng(derive_stream_seed(config.seed, kPartitionStream));
  const std::size_t n_external = static_cast<std::size_t>(
      std::llround(config.external_fraction * static_cast<double>(config.n_images)));
  std::vector<std::size_t> idx(config.n_images);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(
                                  part_rng.next_below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  for (std::size_t i = 0; i < n_external && i < idx.size(); ++i) {
    population.manifest.entries[idx[i]].partition = Partition::EXTERNAL;
  }

  for (std::size_t s = 0; s < n_submissions; ++s) {
    SplitMix64 rng(derive_stream_seed(config.seed, kSubmissionStreamBase + s));
    const double spread = 0.3 * config.accuracy_knob * (1.0 - config.accuracy_knob);
    const double jitter = spread * (2.0 * rng.next_double() - 1.0);
    const double alpha = std::clamp(config.accuracy_knob + jitter, 0.0, 1.0);
    const double alpha_ext =
        std::clamp(alpha - 0.3 * config.external_gap_knob, 0.0, 1.0);

    std::vector<PredictionRecord> records;
    records.reserve(config.n_images);
    for (const auto& entry : population.manifest.entries) {
      const double level =
          entry.partition == Partition::EXTERNAL ? alpha_ext : alpha;
      const bool informed = rng.next_bernoulli(level);
      PredictionRecord rec;
      rec.image_id = entry.image_id;
      for (int c = 0; c < kNumClasses; ++c) {
        const double u = rng.next_double();
        if (informed) {
          rec.probs[c] = c == static_cast<int>(entry.label) ? 0.75 + 0.25 * u
                                                            : 0.25 * u;
        } else {
          rec.probs[c] = u;
        }
      }
      records.push_back(std::move(rec));
    }
    population.submission_ids.push_back(submission_id_for(s));
    population.submissions.push_back(std::move(records));
  }
  return population;
}

SegPopulation gen_segmentation_population(const SynthConfig& config,
                                          std::size_t n_submissions,
                                          FailureMode mode,
                                          double max_failure_rate) {
  config.validate();
  if (config.image_size < 32) {
    throw BenchError(errc::kInvalidConfig,
                     "segmentation populations need image_size >= 32");
  }
  if (config.n_images == 0 || n_submissions == 0) {
    throw BenchError(errc::kInvalidConfig,
                     "segmentation populations need images and submissions");
  }
  if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) {
    throw BenchError(errc::kInvalidConfig, "max_failure_rate must lie in [0, 1]");
  }

  // Fixed 16x8 rectangle; shifted copies give exactly controlled overlaps:
  // shift 4 -> J = 12/20 = 0.6, disjoint shift -> J = 0.
  constexpr int kRectW = 16, kRectH = 8, kX0 = 4, kY0 = 8;
  SegPopulation population;
  population.manifest.task = Task::SEGMENTATION;
  population.manifest.threshold = 0.65;

  auto make_rect = [&](int x0, int y0) {
    BinaryMask m = BinaryMask::filled(config.image_size, config.image_size, false);
    for (int y = y0; y < y0 + kRectH; ++y)
      for (int x = x0; x < x0 + kRectW; ++x) m.set(x, y, true);
    return m;
  };

  for (std::size_t i = 0; i < config.n_images; ++i) {
    ManifestEntry entry;
    entry.image_id = image_id_for(i);
    entry.mask_path = "masks/" + entry.image_id + ".png";
    entry.stratum = static_cast<SegStratum>(i % kNumStrata);
    population.manifest.entries.push_back(entry);
    population.truth.emplace(entry.image_id, make_rect(kX0, kY0));
  }

  for (std::size_t s = 0; s < n_submissions; ++s) {
    const double fraction =
        n_submissions == 1
            ? 0.0
            : max_failure_rate * static_cast<double>(s) /
                  static_cast<double>(n_submissions - 1);
    const std::size_t n_failed = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(config.n_images)));
    std::map<std::string, BinaryMask> masks;
    for (std::size_t i = 0; i < config.n_images; ++i) {
      const std::string& id = population.manifest.entries[i].image_id;
      if (i < n_failed) {
        masks.emplace(id, mode == FailureMode::NEAR_MISS
                              ? make_rect(kX0 + kRectW / 4, kY0)
                              : make_rect(kX0, kY0 + kRectH + 2));
      } else {
        masks.emplace(id, make_rect(kX0, kY0));
      }
    }
    population.submission_ids.push_back(submission_id_for(s));
    population.submissions.push_back(std::move(masks));
  }
  return population;
}

}  // namespace lesionbench
