#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "blockshrink/besov.hpp"
#include "blockshrink/design.hpp"
#include "blockshrink/wavelet_basis.hpp"

namespace blockshrink {

// Classical denoising test signals (blocks, bumps, heavisine, doppler) plus a
// few synthetic ones used by the harness.
enum class NamedSignal { blocks, bumps, heavisine, doppler, constant, single_bump, zero };

inline std::string_view to_string(NamedSignal s) {
  switch (s) {
    case NamedSignal::blocks: return "blocks";
    case NamedSignal::bumps: return "bumps";
    case NamedSignal::heavisine: return "heavisine";
    case NamedSignal::doppler: return "doppler";
    case NamedSignal::constant: return "constant";
    case NamedSignal::single_bump: return "single-bump";
    case NamedSignal::zero: return "zero";
  }
  return "unknown";
}

inline NamedSignal parse_signal(std::string_view name) {
  for (auto s : {NamedSignal::blocks, NamedSignal::bumps, NamedSignal::heavisine, NamedSignal::doppler,
                 NamedSignal::constant, NamedSignal::single_bump, NamedSignal::zero}) {
    if (name == to_string(s)) return s;
  }
  if (name == "single_bump") return NamedSignal::single_bump;
  if (name == "noise" || name == "pure-noise") return NamedSignal::zero;
  throw std::invalid_argument("unknown signal '" + std::string(name) + "'");
}

namespace detail {
inline constexpr std::array<double, 11> kJumpLocations = {0.10, 0.13, 0.15, 0.23, 0.25, 0.40,
                                                          0.44, 0.65, 0.76, 0.78, 0.81};
inline constexpr std::array<double, 11> kBlockHeights = {4, -5, 3, -4, 5, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2};
inline constexpr std::array<double, 11> kBumpHeights = {4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2};
inline constexpr std::array<double, 11> kBumpWidths = {0.005, 0.005, 0.006, 0.01, 0.01, 0.03,
                                                       0.01,  0.01,  0.005, 0.008, 0.005};
inline constexpr double kSingleBumpCenter = 0.3;
inline constexpr double kSingleBumpWidth = 0.02;
inline constexpr double kSingleBumpHeight = 8.0;

inline double sgn(double v) { return (v > 0.0) - (v < 0.0); }
}  // namespace detail

inline double eval_signal(NamedSignal s, double t) {
  using std::numbers::pi;
  switch (s) {
    case NamedSignal::blocks: {
      double v = 0.0;
      for (std::size_t i = 0; i < detail::kJumpLocations.size(); ++i) {
        v += detail::kBlockHeights[i] * (1.0 + detail::sgn(t - detail::kJumpLocations[i])) / 2.0;
      }
      return v;
    }
    case NamedSignal::bumps: {
      double v = 0.0;
      for (std::size_t i = 0; i < detail::kJumpLocations.size(); ++i) {
        const double u = std::fabs((t - detail::kJumpLocations[i]) / detail::kBumpWidths[i]);
        v += detail::kBumpHeights[i] / std::pow(1.0 + u, 4);
      }
      return v;
    }
    case NamedSignal::heavisine:
      return 4.0 * std::sin(4.0 * pi * t) - detail::sgn(t - 0.3) - detail::sgn(0.72 - t);
    case NamedSignal::doppler: {
      constexpr double eps = 0.05;
      return std::sqrt(t * (1.0 - t)) * std::sin(2.0 * pi * (1.0 + eps) / (t + eps));
    }
    case NamedSignal::constant: return 1.0;
    case NamedSignal::single_bump: {
      const double u = (t - detail::kSingleBumpCenter) / detail::kSingleBumpWidth;
      return detail::kSingleBumpHeight * std::exp(-u * u);
    }
    case NamedSignal::zero: return 0.0;
  }
  return 0.0;
}

/// Certified bound on sup |f| from the closed forms (triangle inequality).
inline double signal_sup_bound(NamedSignal s) {
  switch (s) {
    case NamedSignal::blocks: {
      double b = 0.0;
      for (double h : detail::kBlockHeights) b += std::fabs(h);
      return b;
    }
    case NamedSignal::bumps: {
      double b = 0.0;
      for (double h : detail::kBumpHeights) b += h;
      return b;
    }
    case NamedSignal::heavisine: return 6.0;
    case NamedSignal::doppler: return 0.5;
    case NamedSignal::constant: return 1.0;
    case NamedSignal::single_bump: return detail::kSingleBumpHeight;
    case NamedSignal::zero: return 0.0;
  }
  return 0.0;
}

/// Smoothness class used for the theoretical rate when none is configured.
/// Heavisine is treated as Hoelder-type with s = 1.
inline std::optional<BesovBallSpec> default_smoothness(NamedSignal s) {
  if (s == NamedSignal::heavisine) return BesovBallSpec{1, ExtendedRational::inf(), ExtendedRational::inf(), 6.0};
  return std::nullopt;
}

/// Random tree with |beta_{j,k}| = 2^{-j(s+1/2-1/pi)} 2^{-j/pi} u_{j,k},
/// u uniform in [1/2, 1] with random sign.
struct RandomBesovSpec {
  Rational s = 2;
  ExtendedRational pi = ExtendedRational::of(2);
  ExtendedRational r = ExtendedRational::of(2);
  std::uint64_t seed = 1;
};

using SignalSpec = std::variant<NamedSignal, RandomBesovSpec>;

inline std::string describe(const SignalSpec& spec) {
  if (const auto* named = std::get_if<NamedSignal>(&spec)) return std::string(to_string(*named));
  const auto& rb = std::get<RandomBesovSpec>(spec);
  return "random-besov(s=" + to_string(rb.s) + ",pi=" + rb.pi.str() + ",r=" + rb.r.str() +
         ",seed=" + std::to_string(rb.seed) + ")";
}

struct TestFunction {
  GridFunction values;
  CoefficientTree tree;
  RegressionFunction f;
  double sup_bound = 0.0;           // certified bound on sup |f|
  std::optional<BesovBallSpec> ball;  // smoothness class with certified radius M
};

inline std::size_t test_function_grid(int jmax) { return std::size_t{1} << (jmax + 6); }

inline TestFunction make_test_function(const SignalSpec& spec, const WaveletBasis& basis, int jmax) {
  if (jmax > 12) throw std::invalid_argument("make_test_function: jmax must be <= 12");
  if (jmax < basis.tau()) throw std::invalid_argument("make_test_function: jmax below tau");
  TestFunction out;
  const std::size_t grid = test_function_grid(jmax);
  if (const auto* named = std::get_if<NamedSignal>(&spec)) {
    const NamedSignal sig = *named;
    out.f = [sig](double t) { return eval_signal(sig, t); };
    out.values = tabulate(out.f, grid);
    out.tree = exact_coefficients(basis, out.values, basis.tau(), jmax);
    out.sup_bound = signal_sup_bound(sig);
    out.ball = default_smoothness(sig);
    return out;
  }

  const auto& rb = std::get<RandomBesovSpec>(spec);
  if (!(rb.s > 0)) throw std::invalid_argument("random-besov: s must be positive");
  if (!rb.pi.infinite && rb.pi.value < 1) throw std::invalid_argument("random-besov: pi must be >= 1");
  const double s = to_double(rb.s);
  const double inv_pi = to_double(rb.pi.reciprocal());
  const double w = s + 0.5 - inv_pi;
  const int j0 = basis.tau();
  std::mt19937_64 rng(derive_seed(rb.seed, 0xbe50f));
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::bernoulli_distribution sign(0.5);
  auto tree = CoefficientTree::zeros(j0, jmax);
  for (double& a : tree.alpha) a = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  for (int j = j0; j <= jmax; ++j) {
    const double envelope = std::exp2(-j * w) * std::exp2(-j * inv_pi);
    for (double& b : tree.level(j)) b = (sign(rng) ? 1.0 : -1.0) * envelope * mag(rng);
  }

  // Level terms of the sequence norm are <= 1 for j >= j0; the scaling level
  // contributes 2^{(j0-1) w} 2^{j0/pi}.
  std::vector<double> level_bounds{std::exp2((j0 - 1) * w) * std::exp2(j0 * inv_pi)};
  for (int j = j0; j <= jmax; ++j) level_bounds.push_back(1.0);
  const double r = rb.r.to_double();
  out.ball = BesovBallSpec{rb.s, rb.pi, rb.r, detail::lq_norm(level_bounds, r)};

  // sup |f| <= max|alpha| C_phi 2^{j0/2} + sum_j max|beta_j| C_psi 2^{j/2}, with
  // C the sup over one period of sum_l |profile(t + l)|.
  auto period_sup = [&](WaveletKind kind) {
    double best = 0.0;
    const std::size_t steps = std::size_t{1} << std::min(basis.refine_depth(), 14);
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(steps);
      double acc = 0.0;
      for (int l = 0; l <= basis.support_length(); ++l) acc += std::fabs(basis.profile(kind, t + l));
      best = std::max(best, acc);
    }
    return best;
  };
  const double c_phi = period_sup(WaveletKind::father);
  const double c_psi = period_sup(WaveletKind::mother);
  double bound = c_phi * std::exp2(0.5 * j0);
  for (int j = j0; j <= jmax; ++j) bound += c_psi * std::exp2(0.5 * j) * std::exp2(-j * w) * std::exp2(-j * inv_pi);
  out.sup_bound = bound;

  out.tree = tree;
  out.values = synthesize(basis, out.tree, grid);
  out.f = [basis_copy = basis, t = out.tree](double x) { return series_value(basis_copy, t, x); };
  return out;
}

}  // namespace blockshrink
