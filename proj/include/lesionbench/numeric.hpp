#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace lesionbench {

// Neumaier-compensated accumulator. Keeps the running error term so the
// final value is the exact sum rounded (at most once for realistic inputs).
// Deterministic for a fixed input order; every aggregate mean in the tool
// goes through this in a documented fixed order.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(const std::vector<double>& xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

// Mean in the given order; callers pass values in the contract order
// (ascending image id, class order, ...). Empty input yields 0.
inline double compensated_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return compensated_sum(xs) / static_cast<double>(xs.size());
}

// Shortest decimal representation that parses back to the same double; the
// CSV and SVG emitters use this so outputs are canonical.
inline std::string shortest_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace lesionbench
