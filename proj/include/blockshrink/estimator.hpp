#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockshrink/design.hpp"
#include "blockshrink/summation.hpp"
#include "blockshrink/wavelet_basis.hpp"

namespace blockshrink {

/// Half-open index range [begin, end) of one block at a level.
struct BlockRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  [[nodiscard]] std::int64_t size() const { return end - begin; }
};

/// Geometry of the block estimator for a given n and p.
///
/// L = floor((ln n)^{p/2}), j1 = floor((p/2) log2(ln n)),
/// j2 = floor((1/2) log2(n / ln n)). Levels hold ceil(2^j / L) blocks of
/// size L with a truncated last block when L does not divide 2^j.
struct BlockGrid {
  double p = 2.0;
  std::size_t n = 0;
  std::int64_t L = 1;
  int j1 = 0;
  int j2 = 0;
  int raw_j1 = 0;
  int raw_j2 = 0;
  bool j1_raised_to_tau = false;
  bool j1_clamped_to_j2 = false;  // warning: the coarse level collapsed onto j2
  std::vector<std::vector<BlockRange>> blocks;  // blocks[j - j1]

  [[nodiscard]] const std::vector<BlockRange>& level(int j) const {
    if (j < j1 || j > j2) throw std::out_of_range("BlockGrid: level " + std::to_string(j) + " not in [j1, j2]");
    return blocks[static_cast<std::size_t>(j - j1)];
  }

  /// Block K (1-based) at level j.
  [[nodiscard]] const BlockRange& block(int j, std::int64_t K) const {
    const auto& lv = level(j);
    if (K < 1 || K > static_cast<std::int64_t>(lv.size())) {
      throw std::out_of_range("BlockGrid: block K=" + std::to_string(K) + " not in level " + std::to_string(j));
    }
    return lv[static_cast<std::size_t>(K - 1)];
  }
};

inline BlockGrid block_grid(std::size_t n, double p, int tau) {
  if (n < 16) throw std::invalid_argument("block_grid: n must be >= 16");
  if (!(p >= 2.0) || !std::isfinite(p)) throw std::invalid_argument("block_grid: p must lie in [2, inf)");
  BlockGrid g;
  g.p = p;
  g.n = n;
  const double ln_n = std::log(static_cast<double>(n));
  g.L = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::pow(ln_n, p / 2.0))));
  g.raw_j1 = static_cast<int>(std::floor((p / 2.0) * std::log2(ln_n)));
  g.raw_j2 = static_cast<int>(std::floor(0.5 * std::log2(static_cast<double>(n) / ln_n)));
  g.j2 = g.raw_j2;
  if (g.j2 < tau) {
    throw std::domain_error("block_grid: n=" + std::to_string(n) + " too small for this basis (j2=" +
                            std::to_string(g.j2) + " < tau=" + std::to_string(tau) + ")");
  }
  g.j1 = g.raw_j1;
  if (g.j1 < tau) {
    g.j1 = tau;
    g.j1_raised_to_tau = true;
  }
  if (g.j1 > g.j2) {
    g.j1 = g.j2;
    g.j1_clamped_to_j2 = true;
  }
  for (int j = g.j1; j <= g.j2; ++j) {
    const std::int64_t count = std::int64_t{1} << j;
    std::vector<BlockRange> lv;
    for (std::int64_t b = 0; b < count; b += g.L) lv.push_back({b, std::min(b + g.L, count)});
    g.blocks.push_back(std::move(lv));
  }
  return g;
}

namespace detail {

inline double design_weight(const DesignDensity& density, double x, double y) {
  const double g = density.pdf(x);
  if (g < density.g_min()) {
    throw std::logic_error("empirical_coefficients: density value below its certified minimum");
  }
  return y / g;
}

}  // namespace detail

/// Weighted empirical coefficients n^{-1} sum Y_i g(X_i)^{-1} phi_{j1,k}(X_i) and
/// the same with psi_{j,k} for j in [j1, j2]. Sums are exact, so the result does
/// not depend on the order of the observations.
inline CoefficientTree empirical_coefficients(const Sample& sample, const DesignDensity& density,
                                              const WaveletBasis& basis, const BlockGrid& grid) {
  if (sample.n == 0) throw std::invalid_argument("empirical_coefficients: empty sample");
  sample.validate();
  std::vector<ExactSum> alpha(std::size_t{1} << grid.j1);
  std::vector<std::vector<ExactSum>> beta;
  for (int j = grid.j1; j <= grid.j2; ++j) beta.emplace_back(std::size_t{1} << j);

  for (std::size_t i = 0; i < sample.n; ++i) {
    const double x = sample.x[i];
    const double w = detail::design_weight(density, x, sample.y[i]);
    basis.for_each_nonzero(WaveletKind::father, grid.j1, x, [&](std::int64_t k, double v) {
      alpha[static_cast<std::size_t>(k)].add(w * v);
    });
    for (int j = grid.j1; j <= grid.j2; ++j) {
      auto& lv = beta[static_cast<std::size_t>(j - grid.j1)];
      basis.for_each_nonzero(WaveletKind::mother, j, x, [&](std::int64_t k, double v) {
        lv[static_cast<std::size_t>(k)].add(w * v);
      });
    }
  }

  const double n = static_cast<double>(sample.n);
  auto tree = CoefficientTree::zeros(grid.j1, grid.j2);
  for (std::size_t k = 0; k < alpha.size(); ++k) tree.alpha[k] = alpha[k].value() / n;
  for (int j = grid.j1; j <= grid.j2; ++j) {
    const auto& src = beta[static_cast<std::size_t>(j - grid.j1)];
    auto dst = tree.level(j);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k].value() / n;
  }
  return tree;
}

/// Empirical detail coefficients at one level only, for k in [k_begin, k_end).
inline std::vector<double> empirical_detail(const Sample& sample, const DesignDensity& density,
                                            const WaveletBasis& basis, int j, std::int64_t k_begin,
                                            std::int64_t k_end) {
  if (sample.n == 0) throw std::invalid_argument("empirical_detail: empty sample");
  if (k_begin < 0 || k_end > (std::int64_t{1} << j) || k_begin >= k_end) {
    throw std::out_of_range("empirical_detail: bad index range");
  }
  std::vector<ExactSum> acc(static_cast<std::size_t>(k_end - k_begin));
  for (std::size_t i = 0; i < sample.n; ++i) {
    const double x = sample.x[i];
    bool hit = false;
    basis.for_each_nonzero(WaveletKind::mother, j, x, [&](std::int64_t k, double) {
      hit = hit || (k >= k_begin && k < k_end);
    });
    if (!hit) continue;
    const double w = detail::design_weight(density, x, sample.y[i]);
    basis.for_each_nonzero(WaveletKind::mother, j, x, [&](std::int64_t k, double v) {
      if (k >= k_begin && k < k_end) acc[static_cast<std::size_t>(k - k_begin)].add(w * v);
    });
  }
  std::vector<double> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = acc[i].value() / static_cast<double>(sample.n);
  return out;
}

/// [|B|^{-1} sum_{k in B} |c_k|^p]^{1/p}, normalized by the block's own size.
inline double block_statistic(std::span<const double> coeffs, double p) {
  if (coeffs.empty()) throw std::invalid_argument("block_statistic: empty block");
  if (!(p > 0.0)) throw std::invalid_argument("block_statistic: p must be positive");
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::fabs(c));
  if (scale == 0.0) return 0.0;
  ExactSum acc;
  for (double c : coeffs) acc.add(std::pow(std::fabs(c) / scale, p));
  return scale * std::pow(acc.value() / static_cast<double>(coeffs.size()), 1.0 / p);
}

enum class ThresholdRule { block, hard, soft };

struct BlockDecision {
  int j = 0;
  std::int64_t K = 0;  // 1-based block index
  double statistic = 0.0;
  double threshold = 0.0;
  bool kept = false;
};

struct Estimate {
  CoefficientTree tree;
  BlockGrid grid;
  ThresholdRule rule = ThresholdRule::block;
  double d = 0.0;  // block constant, or term constant c for hard/soft
  std::vector<std::vector<bool>> kept_blocks;  // [j - j1][K - 1]
  std::vector<BlockDecision> decisions;
  WaveletFamily family = WaveletFamily::haar;
};

/// Applies the block keep-or-kill rule to already computed empirical coefficients.
inline Estimate apply_blockshrink(const CoefficientTree& empirical, const BlockGrid& grid, double d,
                                  WaveletFamily family) {
  if (!(d >= 0.0)) throw std::invalid_argument("blockshrink: d must be >= 0");
  Estimate est;
  est.tree = empirical;
  est.grid = grid;
  est.rule = ThresholdRule::block;
  est.d = d;
  est.family = family;
  const double threshold = d / std::sqrt(static_cast<double>(grid.n));
  for (int j = grid.j1; j <= grid.j2; ++j) {
    auto lv = est.tree.level(j);
    std::vector<bool> mask;
    std::int64_t K = 1;
    for (const auto& b : grid.level(j)) {
      const auto block = lv.subspan(static_cast<std::size_t>(b.begin), static_cast<std::size_t>(b.size()));
      const double stat = block_statistic(block, grid.p);
      const bool keep = stat >= threshold;
      if (!keep) std::fill(block.begin(), block.end(), 0.0);
      mask.push_back(keep);
      est.decisions.push_back({j, K++, stat, threshold, keep});
    }
    est.kept_blocks.push_back(std::move(mask));
  }
  return est;
}

inline Estimate blockshrink(const Sample& sample, const DesignDensity& density, const WaveletBasis& basis,
                            double p, double d) {
  if (!(d >= 0.0)) throw std::invalid_argument("blockshrink: d must be >= 0");
  const auto grid = block_grid(sample.n, p, basis.tau());
  return apply_blockshrink(empirical_coefficients(sample, density, basis, grid), grid, d, basis.family());
}

inline double term_threshold_level(std::size_t n, double c) {
  const double nn = static_cast<double>(n);
  return c * std::sqrt(std::log(nn) / nn);
}

inline Estimate apply_term_threshold(const CoefficientTree& empirical, const BlockGrid& grid,
                                     ThresholdRule mode, double c, WaveletFamily family) {
  if (mode == ThresholdRule::block) throw std::invalid_argument("term_threshold: mode must be hard or soft");
  if (!(c > 0.0)) throw std::invalid_argument("term_threshold: c must be > 0");
  Estimate est;
  est.tree = empirical;
  est.grid = grid;
  est.rule = mode;
  est.d = c;
  est.family = family;
  const double t = term_threshold_level(grid.n, c);
  for (int j = grid.j1; j <= grid.j2; ++j) {
    for (double& b : est.tree.level(j)) {
      const double mag = std::fabs(b);
      if (mode == ThresholdRule::hard) {
        if (mag < t) b = 0.0;
      } else {
        b = mag <= t ? 0.0 : std::copysign(mag - t, b);
      }
    }
  }
  return est;
}

inline Estimate term_threshold(const Sample& sample, const DesignDensity& density, const WaveletBasis& basis,
                               ThresholdRule mode, double c, double p = 2.0) {
  const auto grid = block_grid(sample.n, p, basis.tau());
  return apply_term_threshold(empirical_coefficients(sample, density, basis, grid), grid, mode, c,
                              basis.family());
}

}  // namespace blockshrink
