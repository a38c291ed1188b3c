#pragma once

#include <cstdint>

namespace lesionbench {

// SplitMix64. Output i is a pure bit-mix of (seed + (i+1) * 0x9E3779B97F4A7C15),
// i.e. a counter-based generator: fixed algorithm, bit-exact on every
// platform. Algorithm and test vectors are frozen in docs/formats.md and
// pinned by tests; changing either breaks published fixtures.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // 53-bit uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Unbiased integer in [0, n) via rejection; n >= 1.
  std::uint64_t next_below(std::uint64_t n) {
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

 private:
  std::uint64_t state_;
};

// Derives the seed for an independent, purpose-labelled substream. Defined
// as the first SplitMix64 output of (seed XOR mix(label)), so substreams are
// reproducible regardless of how much the parent stream has been consumed.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t label) {
  SplitMix64 lab(label);
  SplitMix64 mix(seed ^ lab.next_u64());
  return mix.next_u64();
}

}  // namespace lesionbench
