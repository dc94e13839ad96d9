#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blockshrink/grid.hpp"
#include "blockshrink/summation.hpp"

namespace blockshrink {

enum class WaveletFamily { haar, daubechies4, daubechies6 };
enum class WaveletKind { father, mother };

inline std::string_view to_string(WaveletFamily f) {
  switch (f) {
    case WaveletFamily::haar: return "haar";
    case WaveletFamily::daubechies4: return "daubechies4";
    case WaveletFamily::daubechies6: return "daubechies6";
  }
  return "unknown";
}

inline WaveletFamily parse_family(std::string_view name) {
  if (name == "haar") return WaveletFamily::haar;
  if (name == "daubechies4" || name == "db2" || name == "d4") return WaveletFamily::daubechies4;
  if (name == "daubechies6" || name == "db3" || name == "d6") return WaveletFamily::daubechies6;
  throw std::invalid_argument("unknown wavelet family '" + std::string(name) +
                              "' (supported: haar, daubechies4, daubechies6)");
}

inline std::vector<double> lowpass_filter(WaveletFamily family) {
  const double r2 = std::sqrt(2.0);
  switch (family) {
    case WaveletFamily::haar: return {1.0 / r2, 1.0 / r2};
    case WaveletFamily::daubechies4: {
      const double r3 = std::sqrt(3.0);
      const double s = 4.0 * r2;
      return {(1 + r3) / s, (3 + r3) / s, (3 - r3) / s, (1 - r3) / s};
    }
    case WaveletFamily::daubechies6: {
      const double a = std::sqrt(10.0);
      const double b = std::sqrt(5.0 + 2.0 * a);
      const double s = 16.0 * r2;
      return {(1 + a + b) / s,         (5 + a + 3 * b) / s, (10 - 2 * a + 2 * b) / s,
              (10 - 2 * a - 2 * b) / s, (5 + a - 3 * b) / s, (1 + a - b) / s};
    }
  }
  throw std::invalid_argument("lowpass_filter: unsupported family");
}

/// Periodized compactly supported orthonormal wavelet pair on [0, 1].
///
/// phi and psi are supported on [0, S] with S = filter length - 1. Daubechies
/// profiles are tabulated at dyadic points of step 2^-D by the cascade and
/// read back with linear interpolation. Haar is evaluated in closed form with
/// the left-continuous convention phi = 1 on (0, 1], psi = +1 on (0, 1/2],
/// -1 on (1/2, 1]; the periodized family is unchanged as an L^2 basis.
class WaveletBasis {
 public:
  static constexpr int kMinRefineDepth = 8;

  [[nodiscard]] WaveletFamily family() const { return family_; }
  [[nodiscard]] std::span<const double> lowpass() const { return filter_; }
  [[nodiscard]] int support_length() const { return support_; }
  [[nodiscard]] int tau() const { return tau_; }
  [[nodiscard]] int refine_depth() const { return depth_; }
  [[nodiscard]] std::span<const double> phi_table() const { return phi_; }
  [[nodiscard]] std::span<const double> psi_table() const { return psi_; }
  [[nodiscard]] double table_step() const { return std::ldexp(1.0, -depth_); }

  /// Unperiodized phi(t) / psi(t).
  [[nodiscard]] double profile(WaveletKind kind, double t) const {
    if (family_ == WaveletFamily::haar) {
      if (t <= 0.0 || t > 1.0) return 0.0;
      if (kind == WaveletKind::father) return 1.0;
      return t <= 0.5 ? 1.0 : -1.0;
    }
    if (t <= 0.0 || t >= static_cast<double>(support_)) return 0.0;
    const auto& table = kind == WaveletKind::father ? phi_ : psi_;
    const double pos = std::ldexp(t, depth_);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (frac == 0.0) return table[i];
    return (1.0 - frac) * table[i] + frac * table[i + 1];
  }

  [[nodiscard]] double phi(double t) const { return profile(WaveletKind::father, t); }
  [[nodiscard]] double psi(double t) const { return profile(WaveletKind::mother, t); }

  /// Periodized phi_{j,k}(x) or psi_{j,k}(x), x in [0, 1].
  [[nodiscard]] double eval(WaveletKind kind, int j, std::int64_t k, double x) const {
    if (j < 0) throw std::invalid_argument("eval: level must be nonnegative");
    const std::int64_t period = std::int64_t{1} << j;
    if (k < 0 || k >= period) {
      throw std::out_of_range("eval: translation k=" + std::to_string(k) + " outside [0, 2^" +
                              std::to_string(j) + ")");
    }
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("eval: x must lie in [0, 1]");
    const double p = static_cast<double>(period);
    const double t = std::ldexp(x, j) - static_cast<double>(k);
    // reduce into (0, p]; supports are (0, S] so only shifts upward contribute
    double r = t - p * std::ceil(t / p) + p;
    double sum = 0.0;
    for (; r <= static_cast<double>(support_); r += p) sum += profile(kind, r);
    return std::sqrt(p) * sum;
  }

  /// Calls fn(k, value) for each periodized translate at level j that may be
  /// nonzero at x. When j < tau the same k can be reported more than once and
  /// the values must be accumulated.
  template <class Fn>
  void for_each_nonzero(WaveletKind kind, int j, double x, Fn&& fn) const {
    const std::int64_t period = std::int64_t{1} << j;
    const double scale = std::sqrt(static_cast<double>(period));
    const double t = std::ldexp(x, j);
    const auto top = static_cast<std::int64_t>(std::ceil(t)) - 1;
    for (int m = 0; m < support_; ++m) {
      const std::int64_t raw = top - m;
      const double v = profile(kind, t - static_cast<double>(raw));
      if (v == 0.0) continue;
      std::int64_t k = raw % period;
      if (k < 0) k += period;
      fn(k, scale * v);
    }
  }

 private:
  friend WaveletBasis make_basis(WaveletFamily family, int refine_depth);

  WaveletFamily family_ = WaveletFamily::haar;
  std::vector<double> filter_;
  int support_ = 1;
  int tau_ = 0;
  int depth_ = 12;
  std::vector<double> phi_;
  std::vector<double> psi_;
};

namespace detail {

// phi at the integers 0..S: eigenvector of the two-scale matrix for eigenvalue 1,
// normalized so the samples sum to one.
inline std::vector<double> integer_samples(std::span<const double> h) {
  const int n = static_cast<int>(h.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int m = 0; m < n; ++m) {
    for (int q = 0; q < n; ++q) {
      const int idx = 2 * m - q;
      if (idx >= 0 && idx < n) a(m, q) = std::sqrt(2.0) * h[idx];
    }
  }
  a -= Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd v = a.fullPivLu().solve(rhs);
  return {v.data(), v.data() + n};
}

// Trapezoid rule on the table grid. Step profiles (Haar) are left-continuous,
// for which the right-endpoint sum is exact.
inline double table_integral(std::span<const double> table, int depth, bool step_profile) {
  ExactSum acc;
  if (step_profile) {
    for (std::size_t i = 1; i < table.size(); ++i) acc.add(table[i]);
  } else {
    acc.add(0.5 * table.front());
    for (std::size_t i = 1; i + 1 < table.size(); ++i) acc.add(table[i]);
    acc.add(0.5 * table.back());
  }
  return std::ldexp(acc.value(), -depth);
}

}  // namespace detail

inline WaveletBasis make_basis(WaveletFamily family, int refine_depth = 12) {
  if (refine_depth < WaveletBasis::kMinRefineDepth) {
    throw std::invalid_argument("make_basis: refine_depth " + std::to_string(refine_depth) +
                                " is below the minimum of " +
                                std::to_string(WaveletBasis::kMinRefineDepth));
  }
  if (refine_depth > 20) throw std::invalid_argument("make_basis: refine_depth above 20");

  WaveletBasis b;
  b.family_ = family;
  b.filter_ = lowpass_filter(family);
  b.depth_ = refine_depth;
  const int taps = static_cast<int>(b.filter_.size());
  b.support_ = taps - 1;
  b.tau_ = 0;
  while ((1 << b.tau_) < b.support_) ++b.tau_;

  const double filter_sum = exact_sum(b.filter_);
  if (std::fabs(filter_sum - std::sqrt(2.0)) > 1e-12) {
    throw std::domain_error("make_basis: lowpass filter does not sum to sqrt(2)");
  }

  const std::int64_t per_unit = std::int64_t{1} << refine_depth;
  const std::size_t size = static_cast<std::size_t>(b.support_ * per_unit + 1);
  b.phi_.assign(size, 0.0);
  b.psi_.assign(size, 0.0);

  if (family == WaveletFamily::haar) {
    for (std::int64_t i = 1; i <= per_unit; ++i) {
      b.phi_[static_cast<std::size_t>(i)] = 1.0;
      b.psi_[static_cast<std::size_t>(i)] = i <= per_unit / 2 ? 1.0 : -1.0;
    }
  } else {
    const auto ints = detail::integer_samples(b.filter_);
    for (int m = 0; m <= b.support_; ++m) b.phi_[static_cast<std::size_t>(m * per_unit)] = ints[m];
    const auto last = static_cast<std::int64_t>(size) - 1;
    auto lookup = [&](std::int64_t idx) {
      return (idx >= 0 && idx <= last) ? b.phi_[static_cast<std::size_t>(idx)] : 0.0;
    };
    for (int d = 1; d <= refine_depth; ++d) {
      const std::int64_t step = std::int64_t{1} << (refine_depth - d);
      for (std::int64_t i = step; i < last; i += 2 * step) {
        double acc = 0.0;
        for (int k = 0; k < taps; ++k) acc += b.filter_[k] * lookup(2 * i - k * per_unit);
        b.phi_[static_cast<std::size_t>(i)] = std::sqrt(2.0) * acc;
      }
    }
    for (std::int64_t i = 0; i <= last; ++i) {
      double acc = 0.0;
      for (int k = 0; k < taps; ++k) {
        const double g = ((k % 2) ? -1.0 : 1.0) * b.filter_[taps - 1 - k];
        acc += g * lookup(2 * i - k * per_unit);
      }
      b.psi_[static_cast<std::size_t>(i)] = std::sqrt(2.0) * acc;
    }
  }

  const bool step = family == WaveletFamily::haar;
  const double tol = std::ldexp(1.0, -refine_depth / 2);
  const double int_phi = detail::table_integral(b.phi_, refine_depth, step);
  const double int_psi = detail::table_integral(b.psi_, refine_depth, step);
  if (std::fabs(int_phi - 1.0) > tol || std::fabs(int_psi) > tol) {
    throw std::domain_error("make_basis: tabulated integrals of phi/psi off at depth " +
                            std::to_string(refine_depth));
  }

  // Gram matrix of the periodized father translates at level tau, via the
  // tabulated autocorrelation a(m) = \int phi(t) phi(t - m) dt.
  std::vector<double> autocorr(static_cast<std::size_t>(b.support_), 0.0);
  for (int m = 0; m < b.support_; ++m) {
    std::vector<double> prod(size, 0.0);
    const std::int64_t shift = m * per_unit;
    for (std::size_t i = static_cast<std::size_t>(shift); i < size; ++i) {
      prod[i] = b.phi_[i] * b.phi_[i - static_cast<std::size_t>(shift)];
    }
    autocorr[static_cast<std::size_t>(m)] = detail::table_integral(prod, refine_depth, step);
  }
  const int period = 1 << b.tau_;
  for (int k = 0; k < period; ++k) {
    for (int kp = 0; kp < period; ++kp) {
      double g = 0.0;
      for (int shift = -b.support_ - period; shift <= b.support_ + period; ++shift) {
        const int m = kp - k + shift * period;
        if (std::abs(m) < b.support_) g += autocorr[static_cast<std::size_t>(std::abs(m))];
      }
      if (std::fabs(g - (k == kp ? 1.0 : 0.0)) > 1e-6) {
        throw std::domain_error("make_basis: refine_depth " + std::to_string(refine_depth) +
                                " too small, father translates at level tau are not "
                                "orthonormal within 1e-6");
      }
    }
  }
  return b;
}

/// Wavelet coefficients alpha_{j0,k} and beta_{j,k} for j in [j0, jmax].
///
/// `jmax == j0 - 1` encodes a tree with scaling coefficients only.
struct CoefficientTree {
  int j0 = 0;
  int jmax = -1;
  std::vector<double> alpha;
  std::vector<std::vector<double>> beta;

  static CoefficientTree zeros(int base, int top) {
    if (base < 0 || top < base - 1) throw std::invalid_argument("CoefficientTree: bad level range");
    CoefficientTree t;
    t.j0 = base;
    t.jmax = top;
    t.alpha.assign(std::size_t{1} << base, 0.0);
    for (int j = base; j <= top; ++j) t.beta.emplace_back(std::size_t{1} << j, 0.0);
    return t;
  }

  [[nodiscard]] int detail_levels() const { return jmax - j0 + 1; }
  [[nodiscard]] std::span<double> level(int j) { return beta.at(static_cast<std::size_t>(j - j0)); }
  [[nodiscard]] std::span<const double> level(int j) const {
    return beta.at(static_cast<std::size_t>(j - j0));
  }
  [[nodiscard]] double& detail(int j, std::int64_t k) {
    return beta.at(static_cast<std::size_t>(j - j0)).at(static_cast<std::size_t>(k));
  }
  [[nodiscard]] double detail(int j, std::int64_t k) const {
    return beta.at(static_cast<std::size_t>(j - j0)).at(static_cast<std::size_t>(k));
  }

  [[nodiscard]] bool all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(alpha.begin(), alpha.end(), finite)) return false;
    return std::all_of(beta.begin(), beta.end(),
                       [&](const auto& lv) { return std::all_of(lv.begin(), lv.end(), finite); });
  }

  void validate() const {
    if (alpha.size() != (std::size_t{1} << j0)) throw std::invalid_argument("CoefficientTree: alpha size");
    if (beta.size() != static_cast<std::size_t>(detail_levels())) {
      throw std::invalid_argument("CoefficientTree: level count");
    }
    for (int j = j0; j <= jmax; ++j) {
      if (level(j).size() != (std::size_t{1} << j)) {
        throw std::invalid_argument("CoefficientTree: level " + std::to_string(j) + " must hold 2^j values");
      }
    }
    if (!all_finite()) throw std::invalid_argument("CoefficientTree: non-finite coefficient");
  }
};

/// max over grid points of 2^{-jm/2} sum_k |psi_{j,k}(x)|^m.
inline double concentration_ratio(const WaveletBasis& basis, int j, double m, std::size_t grid_size) {
  if (j < basis.tau()) throw std::invalid_argument("concentration_ratio: level below tau");
  if (!(m > 0.0)) throw std::invalid_argument("concentration_ratio: m must be positive");
  if (grid_size < (std::size_t{1} << (j + 4))) {
    throw std::invalid_argument("concentration_ratio: grid_size must be at least 2^(j+4)");
  }
  const double norm = std::ldexp(1.0, -j);
  double best = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(grid_size);
    double s = 0.0;
    basis.for_each_nonzero(WaveletKind::mother, j, x, [&](std::int64_t, double v) {
      s += std::pow(std::fabs(v), m);
    });
    best = std::max(best, s * std::pow(norm, m / 2.0));
  }
  return best;
}

/// Trapezoid-rule wavelet coefficients of a function sampled on a dyadic grid.
inline CoefficientTree exact_coefficients(const WaveletBasis& basis, const GridFunction& f, int j0,
                                          int jmax) {
  if (j0 < basis.tau()) throw std::invalid_argument("exact_coefficients: j0 below tau");
  if (jmax < j0) throw std::invalid_argument("exact_coefficients: jmax below j0");
  const std::size_t n = f.intervals();
  require_dyadic_intervals(n, "exact_coefficients");
  if (n < (std::size_t{1} << (jmax + 6))) {
    throw std::invalid_argument("exact_coefficients: grid resolution must be at least 2^(jmax+6), got " +
                                std::to_string(n));
  }
  std::vector<ExactSum> alpha(std::size_t{1} << j0);
  std::vector<std::vector<ExactSum>> beta;
  for (int j = j0; j <= jmax; ++j) beta.emplace_back(std::size_t{1} << j);

  for (std::size_t i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 * f.values[i] : f.values[i];
    if (w == 0.0) continue;
    const double x = f.x(i);
    basis.for_each_nonzero(WaveletKind::father, j0, x, [&](std::int64_t k, double v) {
      alpha[static_cast<std::size_t>(k)].add(w * v);
    });
    for (int j = j0; j <= jmax; ++j) {
      auto& lv = beta[static_cast<std::size_t>(j - j0)];
      basis.for_each_nonzero(WaveletKind::mother, j, x, [&](std::int64_t k, double v) {
        lv[static_cast<std::size_t>(k)].add(w * v);
      });
    }
  }

  const double h = 1.0 / static_cast<double>(n);
  CoefficientTree out = CoefficientTree::zeros(j0, jmax);
  for (std::size_t k = 0; k < alpha.size(); ++k) out.alpha[k] = alpha[k].value() * h;
  for (int j = j0; j <= jmax; ++j) {
    auto& src = beta[static_cast<std::size_t>(j - j0)];
    auto dst = out.level(j);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k].value() * h;
  }
  return out;
}

/// Value of the finite wavelet series at one point.
inline double series_value(const WaveletBasis& basis, const CoefficientTree& tree, double x) {
  double acc = 0.0;
  basis.for_each_nonzero(WaveletKind::father, tree.j0, x, [&](std::int64_t k, double v) {
    acc += tree.alpha[static_cast<std::size_t>(k)] * v;
  });
  for (int j = tree.j0; j <= tree.jmax; ++j) {
    const auto lv = tree.level(j);
    basis.for_each_nonzero(WaveletKind::mother, j, x, [&](std::int64_t k, double v) {
      acc += lv[static_cast<std::size_t>(k)] * v;
    });
  }
  return acc;
}

inline GridFunction synthesize(const WaveletBasis& basis, const CoefficientTree& tree,
                               std::size_t grid_size) {
  require_dyadic_intervals(grid_size, "synthesize");
  const int top = std::max(tree.jmax, tree.j0);
  if (grid_size < (std::size_t{1} << (top + 2))) {
    throw std::invalid_argument("synthesize: grid_size must be at least 2^(jmax+2)");
  }
  return tabulate([&](double x) { return series_value(basis, tree, x); }, grid_size);
}

}  // namespace blockshrink
