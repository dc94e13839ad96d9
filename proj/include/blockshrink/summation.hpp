#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace blockshrink {

/// Exact floating-point accumulator (Shewchuk partials).
///
/// The running sum is held as a list of non-overlapping partials, so the
/// represented value is the exact sum of everything added. `value()` rounds
/// that exact sum once, which makes the result independent of the order in
/// which terms were added.
class ExactSum {
 public:
  void add(double x) {
    std::size_t used = 0;
    for (double y : partials_) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[used++] = lo;
      x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
  }

  ExactSum& operator+=(double x) {
    add(x);
    return *this;
  }

  /// Correctly rounded (half-even) value of the exact sum.
  [[nodiscard]] double value() const {
    std::size_t n = partials_.size();
    if (n == 0) return 0.0;
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

  void clear() { partials_.clear(); }

 private:
  std::vector<double> partials_;
};

inline double exact_sum(std::span<const double> values) {
  ExactSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace blockshrink
