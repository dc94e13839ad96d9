#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockshrink/grid.hpp"

namespace blockshrink {

/// splitmix64 finalizer; used to derive decorrelated seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(seed ^ mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL)));
}

enum class DensityKind { uniform, linear_tilt, piecewise_constant };

/// Known design density g on [0, 1], bounded away from 0 and infinity.
///
/// Every kind has a closed-form CDF inverse so sampling is a single
/// transform of a uniform variate.
class DesignDensity {
 public:
  static DesignDensity uniform() { return DesignDensity{}; }

  /// g(x) = 1 - slope/2 + slope * x, |slope| < 2.
  static DesignDensity linear_tilt(double slope) {
    if (!(std::fabs(slope) < 2.0)) {
      throw std::invalid_argument("linear-tilt density: |slope| must be < 2 so g stays positive");
    }
    DesignDensity d;
    d.kind_ = DensityKind::linear_tilt;
    d.slope_ = slope;
    d.g_min_ = 1.0 - std::fabs(slope) / 2.0;
    d.g_max_ = 1.0 + std::fabs(slope) / 2.0;
    d.certify();
    return d;
  }

  /// Constant `values[i]` on [breaks[i], breaks[i+1]); the last piece is closed.
  static DesignDensity piecewise_constant(std::vector<double> breaks, std::vector<double> values) {
    if (breaks.size() < 2 || values.size() != breaks.size() - 1) {
      throw std::invalid_argument("piecewise density: need k+1 breakpoints for k values");
    }
    if (breaks.front() != 0.0 || breaks.back() != 1.0) {
      throw std::invalid_argument("piecewise density: breakpoints must start at 0 and end at 1");
    }
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      if (!(breaks[i] < breaks[i + 1])) {
        throw std::invalid_argument("piecewise density: breakpoints must be strictly increasing");
      }
    }
    for (double v : values) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("piecewise density: values must be positive and finite");
      }
    }
    DesignDensity d;
    d.kind_ = DensityKind::piecewise_constant;
    d.breaks_ = std::move(breaks);
    d.values_ = std::move(values);
    d.cdf_.assign(d.breaks_.size(), 0.0);
    for (std::size_t i = 0; i < d.values_.size(); ++i) {
      d.cdf_[i + 1] = d.cdf_[i] + d.values_[i] * (d.breaks_[i + 1] - d.breaks_[i]);
    }
    if (std::fabs(d.cdf_.back() - 1.0) > 1e-9) {
      throw std::invalid_argument("piecewise density: integrates to " + std::to_string(d.cdf_.back()) +
                                  ", not 1");
    }
    d.g_min_ = *std::min_element(d.values_.begin(), d.values_.end());
    d.g_max_ = *std::max_element(d.values_.begin(), d.values_.end());
    d.certify();
    return d;
  }

  [[nodiscard]] DensityKind kind() const { return kind_; }
  [[nodiscard]] double slope() const { return slope_; }
  [[nodiscard]] const std::vector<double>& breaks() const { return breaks_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] double g_min() const { return g_min_; }
  [[nodiscard]] double g_max() const { return g_max_; }

  [[nodiscard]] double pdf(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::domain_error("design density evaluated outside [0, 1]: x=" + std::to_string(x));
    }
    switch (kind_) {
      case DensityKind::uniform: return 1.0;
      case DensityKind::linear_tilt: return 1.0 - slope_ / 2.0 + slope_ * x;
      case DensityKind::piecewise_constant: return values_[piece(x)];
    }
    return 1.0;
  }

  /// Inverse CDF on [0, 1].
  [[nodiscard]] double quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    switch (kind_) {
      case DensityKind::uniform: return u;
      case DensityKind::linear_tilt: {
        // G(x) = c x + slope x^2 / 2 with c = 1 - slope/2; stable root of G(x) = u.
        const double c = 1.0 - slope_ / 2.0;
        const double x = 2.0 * u / (c + std::sqrt(c * c + 2.0 * slope_ * u));
        return std::clamp(x, 0.0, 1.0);
      }
      case DensityKind::piecewise_constant: {
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t i = it == cdf_.begin() ? 0 : static_cast<std::size_t>(it - cdf_.begin()) - 1;
        i = std::min(i, values_.size() - 1);
        const double x = breaks_[i] + (u - cdf_[i]) / values_[i];
        return std::clamp(x, breaks_[i], breaks_[i + 1]);
      }
    }
    return u;
  }

  [[nodiscard]] std::string describe() const {
    switch (kind_) {
      case DensityKind::uniform: return "uniform";
      case DensityKind::linear_tilt: return "linear-tilt(slope=" + std::to_string(slope_) + ")";
      case DensityKind::piecewise_constant: return "piecewise-constant";
    }
    return "unknown";
  }

 private:
  [[nodiscard]] std::size_t piece(double x) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    const auto idx = static_cast<std::size_t>(it - breaks_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, values_.size() - 1);
  }

  // Numerical check of the normalization and of the stated bounds on a fine grid.
  void certify() const {
    constexpr std::size_t kGrid = std::size_t{1} << 14;
    const auto g = tabulate([this](double x) { return pdf(x); }, kGrid);
    for (double v : g.values) {
      if (v < g_min_ - 1e-15 || v > g_max_ + 1e-15) {
        throw std::logic_error("design density: bound certification failed");
      }
    }
    if (!(g_min_ > 0.0) || !std::isfinite(g_max_)) {
      throw std::invalid_argument("design density: must be bounded away from 0 and infinity");
    }
    if (kind_ != DensityKind::piecewise_constant && std::fabs(trapezoid(g.values) - 1.0) > 1e-9) {
      throw std::logic_error("design density: does not integrate to 1");
    }
  }

  DensityKind kind_ = DensityKind::uniform;
  double slope_ = 0.0;
  std::vector<double> breaks_;
  std::vector<double> values_;
  std::vector<double> cdf_;
  double g_min_ = 1.0;
  double g_max_ = 1.0;
};

inline double eval_pdf(const DesignDensity& density, double x) { return density.pdf(x); }

/// Observations (x_i, y_i) from Y = f(X) + z.
struct Sample {
  std::size_t n = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::uint64_t seed = 0;

  void validate() const {
    if (x.size() != n || y.size() != n) throw std::invalid_argument("Sample: length mismatch");
    for (double v : x) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("Sample: x outside [0, 1]");
    }
  }
};

enum class NoiseModel { gaussian, none };

namespace stream {
inline constexpr std::uint64_t design = 1;
inline constexpr std::uint64_t noise = 2;
}  // namespace stream

inline std::vector<double> sample_design(const DesignDensity& density, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_design: n must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, stream::design));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = density.quantile(unif(rng));
  return x;
}

using RegressionFunction = std::function<double(double)>;

inline Sample generate_sample(const RegressionFunction& f, const DesignDensity& density, std::size_t n,
                              std::uint64_t seed, NoiseModel noise = NoiseModel::gaussian) {
  Sample s;
  s.n = n;
  s.seed = seed;
  s.x = sample_design(density, n, seed);
  s.y.resize(n);
  std::mt19937_64 rng(derive_seed(seed, stream::noise));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = noise == NoiseModel::gaussian ? gauss(rng) : 0.0;
    s.y[i] = f(s.x[i]) + z;
  }
  return s;
}

inline Sample generate_sample(const GridFunction& f, const DesignDensity& density, std::size_t n,
                              std::uint64_t seed, NoiseModel noise = NoiseModel::gaussian) {
  return generate_sample([&f](double x) { return interpolate(f, x); }, density, n, seed, noise);
}

}  // namespace blockshrink
