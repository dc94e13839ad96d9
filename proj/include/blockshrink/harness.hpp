#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockshrink/besov.hpp"
#include "blockshrink/design.hpp"
#include "blockshrink/estimator.hpp"
#include "blockshrink/parallel.hpp"
#include "blockshrink/signals.hpp"
#include "blockshrink/summation.hpp"
#include "blockshrink/wavelet_basis.hpp"

namespace blockshrink {

struct MomentSettings {
  int j = 3;
  std::int64_t k = 2;
  double tolerance = 0.3;
};

struct ConcentrationSettings {
  int j = 3;
  std::int64_t K = 1;  // 1-based block index
  std::vector<double> mu_sweep{0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0};
  double calibrated_mu = 8.0;
  double median_slope_tolerance = 0.15;
};

struct ExperimentConfig {
  SignalSpec signal = NamedSignal::heavisine;
  std::optional<BesovBallSpec> smoothness;  // overrides the signal's default class
  DesignDensity density = DesignDensity::uniform();
  WaveletFamily family = WaveletFamily::haar;
  int refine_depth = 12;
  Rational p = 2;
  double d = 4.0;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 100;
  std::uint64_t master_seed = 1;
  std::size_t risk_grid = std::size_t{1} << 14;
  unsigned threads = 1;
  NoiseModel noise = NoiseModel::gaussian;
  double slope_tolerance = 0.15;
  double term_c = std::numbers::sqrt2;
  MomentSettings moment;
  ConcentrationSettings concentration;

  [[nodiscard]] double p_value() const { return to_double(p); }

  void validate() const {
    if (p < 2) throw std::invalid_argument("p: must lie in [2, inf), got " + to_string(p));
    if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("d: must be a finite value >= 0");
    if (n_grid.empty()) throw std::invalid_argument("n_grid: must list at least one sample size");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 256) throw std::invalid_argument("n_grid: every sample size must be >= 256");
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("n_grid: must be strictly increasing");
    }
    if (replications < 50) throw std::invalid_argument("replications: must be >= 50");
    if (!is_power_of_two(risk_grid) || risk_grid < 1024) {
      throw std::invalid_argument("risk_grid: must be a power of two >= 1024");
    }
    if (refine_depth < WaveletBasis::kMinRefineDepth) {
      throw std::invalid_argument("refine_depth: must be >= " + std::to_string(WaveletBasis::kMinRefineDepth));
    }
    if (!(slope_tolerance > 0.0)) throw std::invalid_argument("slope_tolerance: must be positive");
    if (!(term_c > 0.0)) throw std::invalid_argument("term_c: must be positive");
    auto check_ball = [](const char* field, const Rational& s, const ExtendedRational& pi, const ExtendedRational& r) {
      if (!pi.infinite && pi.value < 1) throw std::invalid_argument(std::string(field) + ".pi: must lie in [1, inf]");
      if (!r.infinite && r.value < 1) throw std::invalid_argument(std::string(field) + ".r: must lie in [1, inf]");
      const Rational floor = pi.reciprocal() + Rational(1, 2);
      if (!(s > floor)) {
        throw std::invalid_argument(std::string(field) + ".s: theorem range requires s > 1/pi + 1/2 = " +
                                    to_string(floor) + " (" + format_decimal(floor) + "), got s = " + to_string(s));
      }
    };
    if (smoothness) check_ball("smoothness", smoothness->s, smoothness->pi, smoothness->r);
    if (const auto* rb = std::get_if<RandomBesovSpec>(&signal)) check_ball("signal.random_besov", rb->s, rb->pi, rb->r);
  }
};

/// Theoretical exponent the fitted slope is compared against.
struct TheoryTarget {
  std::string kind;  // "theorem" or "parametric"
  double exponent = 0.0;
  double log_exponent = 0.0;
  std::optional<RateSpec> rate;
  std::optional<BesovBallSpec> ball;
};

inline TheoryTarget theory_for(const ExperimentConfig& config) {
  std::optional<BesovBallSpec> ball = config.smoothness;
  if (!ball) {
    if (const auto* rb = std::get_if<RandomBesovSpec>(&config.signal)) {
      ball = BesovBallSpec{rb->s, rb->pi, rb->r, 1.0};
    } else {
      const auto named = std::get<NamedSignal>(config.signal);
      if (named == NamedSignal::constant || named == NamedSignal::zero) {
        // detail coefficients vanish; only the level-j1 projection variance remains
        return {"parametric", -1.0, 0.0, std::nullopt, std::nullopt};
      }
      ball = default_smoothness(named);
    }
  }
  if (!ball) {
    throw std::invalid_argument("smoothness: signal '" + describe(config.signal) +
                                "' has no default smoothness class; set smoothness {s, pi, r}");
  }
  if (!ball->theorem_applicable()) {
    throw std::invalid_argument("smoothness.s: theorem range requires s > 1/pi + 1/2");
  }
  const auto rate = rate_spec(*ball, config.p);
  return {"theorem", rate.risk_exponent_value(), rate.log_exponent_value(), rate, ball};
}

/// Per-replication seed: master seed xor a hash of (replication, n).
inline std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t replication) {
  return master ^ mix64(mix64(static_cast<std::uint64_t>(replication)) ^ static_cast<std::uint64_t>(n));
}

/// Trapezoid approximation of \int_0^1 |fhat - f|^p.
inline double lp_risk(std::span<const double> estimate, std::span<const double> truth, double p) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("lp_risk: mismatched grids");
  if (estimate.size() < 1024) throw std::invalid_argument("lp_risk: grids must hold at least 1024 points");
  if (!(p > 0.0)) throw std::invalid_argument("lp_risk: p must be positive");
  std::vector<double> diff(estimate.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::pow(std::fabs(estimate[i] - truth[i]), p);
  return trapezoid(diff);
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
};

/// Least squares of log(risk) on log(n).
inline RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  std::vector<double> lx, ly;
  for (const auto& [n, risk] : points) {
    if (!(n > 0.0)) throw std::invalid_argument("fit_rate: sample sizes must be positive");
    if (!(risk > 0.0)) throw std::invalid_argument("fit_rate: risks must be positive");
    lx.push_back(std::log(n));
    ly.push_back(std::log(risk));
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: sample sizes must not all be equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ssr += r * r;
  }
  fit.std_error = std::sqrt(ssr / (m - 2.0) / sxx);
  return fit;
}

struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean and Monte Carlo standard error, reduced in index order.
inline MeanAndError summarize(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("summarize: need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = exact_sum(values) / n;
  ExactSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  return {mean, std::sqrt(ss.value() / (n - 1.0) / n)};
}

namespace detail {

inline constexpr std::size_t kTruthGrid = std::size_t{1} << 20;

// Wavelet coefficients of the configured signal up to level jmax, by
// fine-grid quadrature for closed-form signals and exactly for random trees.
inline CoefficientTree truth_coefficients(const TestFunction& tf, const WaveletBasis& basis,
                                          const SignalSpec& spec, int jmax) {
  if (std::holds_alternative<RandomBesovSpec>(spec)) {
    auto tree = CoefficientTree::zeros(tf.tree.j0, jmax);
    tree.alpha = tf.tree.alpha;
    for (int j = tree.j0; j <= std::min(jmax, tf.tree.jmax); ++j) {
      auto src = tf.tree.level(j);
      std::copy(src.begin(), src.end(), tree.level(j).begin());
    }
    return tree;
  }
  return exact_coefficients(basis, tabulate(tf.f, kTruthGrid), basis.tau(), jmax);
}

inline int signal_levels(const ExperimentConfig& config, const WaveletBasis& basis) {
  int top = basis.tau();
  for (auto n : config.n_grid) top = std::max(top, block_grid(n, config.p_value(), basis.tau()).j2);
  return std::min(12, top + 2);
}

}  // namespace detail

struct RiskPoint {
  std::size_t n = 0;
  int j1 = 0;
  int j2 = 0;
  std::int64_t L = 0;
  double mean_risk = 0.0;
  double std_error = 0.0;
  double kept_fraction = 0.0;  // mean share of detail blocks kept
};

/// Descriptive block-versus-term comparison on the same replications.
struct ComparisonRow {
  std::size_t n = 0;
  double block = 0.0;
  double hard = 0.0;
  double soft = 0.0;
};

struct RiskReport {
  std::string signal;
  std::string density;
  std::string family;
  double p = 2.0;
  double d = 4.0;
  std::size_t replications = 0;
  std::uint64_t master_seed = 0;
  std::vector<RiskPoint> points;
  RateFit fit;
  TheoryTarget theory;
  double tolerance = 0.15;
  bool pass = false;
  std::vector<ComparisonRow> comparison;
};

inline RiskReport run_rate_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto theory = theory_for(config);
  const auto basis = make_basis(config.family, config.refine_depth);
  const double p = config.p_value();
  const auto tf = make_test_function(config.signal, basis, detail::signal_levels(config, basis));
  const auto truth = tabulate(tf.f, config.risk_grid);

  RiskReport report;
  report.signal = describe(config.signal);
  report.density = config.density.describe();
  report.family = std::string(to_string(config.family));
  report.p = p;
  report.d = config.d;
  report.replications = config.replications;
  report.master_seed = config.master_seed;
  report.theory = theory;
  report.tolerance = config.slope_tolerance;

  std::vector<std::pair<double, double>> curve;
  for (const auto n : config.n_grid) {
    const auto grid = block_grid(n, p, basis.tau());
    std::vector<double> block(config.replications), hard(config.replications), soft(config.replications),
        kept(config.replications);
    parallel_for(config.replications, config.threads, [&](std::size_t rep) {
      const auto seed = replication_seed(config.master_seed, n, rep);
      try {
        const auto sample = generate_sample(tf.f, config.density, n, seed, config.noise);
        const auto emp = empirical_coefficients(sample, config.density, basis, grid);
        const auto bs = apply_blockshrink(emp, grid, config.d, config.family);
        const auto h = apply_term_threshold(emp, grid, ThresholdRule::hard, config.term_c, config.family);
        const auto s = apply_term_threshold(emp, grid, ThresholdRule::soft, config.term_c, config.family);
        block[rep] = lp_risk(synthesize(basis, bs.tree, config.risk_grid).values, truth.values, p);
        hard[rep] = lp_risk(synthesize(basis, h.tree, config.risk_grid).values, truth.values, p);
        soft[rep] = lp_risk(synthesize(basis, s.tree, config.risk_grid).values, truth.values, p);
        std::size_t total = 0, on = 0;
        for (const auto& lv : bs.kept_blocks) {
          total += lv.size();
          on += static_cast<std::size_t>(std::count(lv.begin(), lv.end(), true));
        }
        kept[rep] = total ? static_cast<double>(on) / static_cast<double>(total) : 0.0;
      } catch (const std::exception& e) {
        throw std::runtime_error("replication " + std::to_string(rep) + " at n=" + std::to_string(n) +
                                 " (seed " + std::to_string(seed) + ") failed: " + e.what());
      }
    });
    const auto summary = summarize(block);
    report.points.push_back({n, grid.j1, grid.j2, grid.L, summary.mean, summary.std_error, summarize(kept).mean});
    report.comparison.push_back({n, summary.mean, summarize(hard).mean, summarize(soft).mean});
    curve.emplace_back(static_cast<double>(n), summary.mean);
  }
  if (curve.size() >= 3) {
    report.fit = fit_rate(curve);
    report.pass = std::fabs(report.fit.slope - theory.exponent) <= config.slope_tolerance;
  }
  return report;
}

struct MomentPoint {
  std::size_t n = 0;
  double truth = 0.0;
  double moment = 0.0;  // E|beta_hat - beta|^{2p}
  double std_error = 0.0;
};

struct MomentReport {
  int j = 0;
  std::int64_t k = 0;
  double p = 2.0;
  std::vector<MomentPoint> points;
  RateFit fit;
  double target_slope = -2.0;
  double tolerance = 0.3;
  bool pass = false;
};

/// Monte Carlo E|beta_hat_{j,k} - beta_{j,k}|^{2p} across n, with its log-log slope.
inline MomentReport check_moment_bound(const ExperimentConfig& config, int j, std::int64_t k) {
  config.validate();
  const auto basis = make_basis(config.family, config.refine_depth);
  const double p = config.p_value();
  if (k < 0 || k >= (std::int64_t{1} << j)) throw std::out_of_range("check_moment_bound: k out of range");
  for (const auto n : config.n_grid) {
    const auto grid = block_grid(n, p, basis.tau());
    if (j < grid.j1 || j > grid.j2) {
      throw std::invalid_argument("check_moment_bound: level j=" + std::to_string(j) + " outside [j1, j2] = [" +
                                  std::to_string(grid.j1) + ", " + std::to_string(grid.j2) + "] at n=" +
                                  std::to_string(n));
    }
  }
  const auto tf = make_test_function(config.signal, basis, std::max(j, basis.tau()));
  const double beta = detail::truth_coefficients(tf, basis, config.signal, j).detail(j, k);

  MomentReport report;
  report.j = j;
  report.k = k;
  report.p = p;
  report.target_slope = -p;
  report.tolerance = config.moment.tolerance;
  std::vector<std::pair<double, double>> curve;
  for (const auto n : config.n_grid) {
    std::vector<double> dev(config.replications);
    parallel_for(config.replications, config.threads, [&](std::size_t rep) {
      const auto sample = generate_sample(tf.f, config.density, n, replication_seed(config.master_seed, n, rep),
                                          config.noise);
      const double est = empirical_detail(sample, config.density, basis, j, k, k + 1).front();
      dev[rep] = std::pow(std::fabs(est - beta), 2.0 * p);
    });
    const auto s = summarize(dev);
    report.points.push_back({n, beta, s.mean, s.std_error});
    if (s.mean > 0.0) curve.emplace_back(static_cast<double>(n), s.mean);
  }
  if (curve.size() >= 3 && curve.size() == config.n_grid.size()) {
    report.fit = fit_rate(curve);
    report.pass = std::fabs(report.fit.slope - report.target_slope) <= report.tolerance;
  }
  return report;
}

struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
};

/// 95% Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct ConcentrationCell {
  double mu = 0.0;
  std::size_t events = 0;
  double frequency = 0.0;
  WilsonInterval wilson;
  bool point_within_envelope = false;   // frequency <= 4 n^{-p}
  bool wilson_within_envelope = false;  // Wilson upper bound <= 4 n^{-p}
};

struct ConcentrationPoint {
  std::size_t n = 0;
  std::int64_t block_size = 0;
  double envelope = 0.0;          // 4 n^{-p}
  double median_deviation = 0.0;  // median of the block deviation statistic
  std::vector<ConcentrationCell> cells;
};

struct ConcentrationReport {
  int j = 0;
  std::int64_t K = 1;
  double p = 2.0;
  std::size_t replications = 0;
  std::vector<ConcentrationPoint> points;
  bool nested = true;  // frequencies nonincreasing in mu at every n
  std::optional<double> smallest_mu_wilson;  // smallest swept mu with Wilson upper <= envelope at every n
  std::optional<double> smallest_mu_point;   // same with the point frequency
  RateFit median_fit;
  double median_slope_tolerance = 0.15;
  bool median_scaling_ok = false;
};

/// Frequency of [|B|^{-1} sum_{k in B} |beta_hat - beta|^p]^{1/p} >= (mu/2) n^{-1/2}
/// for block (j, K) over replications, for each mu in `mus`.
inline ConcentrationReport check_concentration(const ExperimentConfig& config, int j, std::int64_t K,
                                               std::vector<double> mus) {
  config.validate();
  if (mus.empty()) throw std::invalid_argument("check_concentration: empty mu sweep");
  std::sort(mus.begin(), mus.end());
  const auto basis = make_basis(config.family, config.refine_depth);
  const double p = config.p_value();
  std::vector<BlockGrid> grids;
  for (const auto n : config.n_grid) {
    auto grid = block_grid(n, p, basis.tau());
    (void)grid.block(j, K);  // validates (j, K) at this n
    grids.push_back(std::move(grid));
  }
  const auto tf = make_test_function(config.signal, basis, std::max(j, basis.tau()));
  const auto truth = detail::truth_coefficients(tf, basis, config.signal, j);

  ConcentrationReport report;
  report.j = j;
  report.K = K;
  report.p = p;
  report.replications = config.replications;
  report.median_slope_tolerance = config.concentration.median_slope_tolerance;
  std::vector<bool> mu_ok_wilson(mus.size(), true), mu_ok_point(mus.size(), true);
  std::vector<std::pair<double, double>> medians;

  for (std::size_t gi = 0; gi < grids.size(); ++gi) {
    const auto n = config.n_grid[gi];
    const auto& blk = grids[gi].block(j, K);
    std::vector<double> stat(config.replications);
    parallel_for(config.replications, config.threads, [&](std::size_t rep) {
      const auto sample = generate_sample(tf.f, config.density, n, replication_seed(config.master_seed, n, rep),
                                          config.noise);
      auto est = empirical_detail(sample, config.density, basis, j, blk.begin, blk.end);
      for (std::size_t i = 0; i < est.size(); ++i) est[i] -= truth.detail(j, blk.begin + static_cast<std::int64_t>(i));
      stat[rep] = block_statistic(est, p);
    });

    ConcentrationPoint pt;
    pt.n = n;
    pt.block_size = blk.size();
    pt.envelope = 4.0 * std::pow(static_cast<double>(n), -p);
    std::vector<double> sorted = stat;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    pt.median_deviation = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    if (pt.median_deviation > 0.0) medians.emplace_back(static_cast<double>(n), pt.median_deviation);

    const double root_n = std::sqrt(static_cast<double>(n));
    std::size_t previous = config.replications + 1;
    for (std::size_t mi = 0; mi < mus.size(); ++mi) {
      const double level = mus[mi] / 2.0 / root_n;
      const auto events = static_cast<std::size_t>(
          std::count_if(stat.begin(), stat.end(), [&](double v) { return v >= level; }));
      ConcentrationCell cell;
      cell.mu = mus[mi];
      cell.events = events;
      cell.frequency = static_cast<double>(events) / static_cast<double>(config.replications);
      cell.wilson = wilson_interval(events, config.replications);
      cell.point_within_envelope = cell.frequency <= pt.envelope;
      cell.wilson_within_envelope = cell.wilson.upper <= pt.envelope;
      if (events > previous) report.nested = false;
      previous = events;
      if (!cell.wilson_within_envelope) mu_ok_wilson[mi] = false;
      if (!cell.point_within_envelope) mu_ok_point[mi] = false;
      pt.cells.push_back(cell);
    }
    report.points.push_back(std::move(pt));
  }
  for (std::size_t mi = 0; mi < mus.size(); ++mi) {
    if (mu_ok_wilson[mi] && !report.smallest_mu_wilson) report.smallest_mu_wilson = mus[mi];
    if (mu_ok_point[mi] && !report.smallest_mu_point) report.smallest_mu_point = mus[mi];
  }
  if (medians.size() >= 3 && medians.size() == config.n_grid.size()) {
    report.median_fit = fit_rate(medians);
    report.median_scaling_ok = std::fabs(report.median_fit.slope + 0.5) <= report.median_slope_tolerance;
  }
  return report;
}

}  // namespace blockshrink
