#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockshrink/summation.hpp"

namespace blockshrink {

inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

/// Samples of a function on the closed dyadic grid x_i = i / N, i = 0..N.
///
/// `intervals()` is N; the sample vector holds N + 1 values so both
/// endpoints of [0, 1] are present and the trapezoid rule needs no wrap.
struct GridFunction {
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] std::size_t intervals() const { return values.empty() ? 0 : values.size() - 1; }
  [[nodiscard]] double x(std::size_t i) const {
    return static_cast<double>(i) / static_cast<double>(intervals());
  }
};

inline void require_dyadic_intervals(std::size_t intervals, const char* what) {
  if (!is_power_of_two(intervals)) {
    throw std::invalid_argument(std::string(what) + ": grid size must be a power of two, got " +
                                std::to_string(intervals));
  }
}

template <class F>
GridFunction tabulate(F&& f, std::size_t intervals) {
  require_dyadic_intervals(intervals, "tabulate");
  GridFunction out;
  out.values.resize(intervals + 1);
  const double step = 1.0 / static_cast<double>(intervals);
  for (std::size_t i = 0; i <= intervals; ++i) out.values[i] = f(static_cast<double>(i) * step);
  return out;
}

/// Composite trapezoid rule over [0, 1] for equally spaced samples.
inline double trapezoid(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("trapezoid: need at least two samples");
  ExactSum acc;
  acc.add(0.5 * samples.front());
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) acc.add(samples[i]);
  acc.add(0.5 * samples.back());
  return acc.value() / static_cast<double>(samples.size() - 1);
}

/// Linear interpolation of grid samples at x in [0, 1].
inline double interpolate(const GridFunction& g, double x) {
  const std::size_t n = g.intervals();
  if (n == 0) throw std::invalid_argument("interpolate: empty grid");
  if (x <= 0.0) return g.values.front();
  if (x >= 1.0) return g.values.back();
  const double pos = x * static_cast<double>(n);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (frac == 0.0) return g.values[i];
  return (1.0 - frac) * g.values[i] + frac * g.values[i + 1];
}

}  // namespace blockshrink
