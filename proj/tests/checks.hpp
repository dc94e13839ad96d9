#pragma once

// Randomized estimator checks shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blockshrink/blockshrink.hpp"

namespace checks {

using namespace blockshrink;

struct PropertyReport {
  std::size_t cases = 0;
  std::size_t failed_cases = 0;
  std::vector<std::string> failures;  // first few messages
};

inline const WaveletBasis& cached_basis(WaveletFamily f) {
  static const WaveletBasis haar = make_basis(WaveletFamily::haar);
  static const WaveletBasis d4 = make_basis(WaveletFamily::daubechies4);
  static const WaveletBasis d6 = make_basis(WaveletFamily::daubechies6);
  switch (f) {
    case WaveletFamily::haar: return haar;
    case WaveletFamily::daubechies4: return d4;
    case WaveletFamily::daubechies6: return d6;
  }
  return haar;
}

inline bool same_tree(const CoefficientTree& a, const CoefficientTree& b) {
  return a.j0 == b.j0 && a.jmax == b.jmax && a.alpha == b.alpha && a.beta == b.beta;
}

/// Threshold monotonicity in d, linearity in y, d = 0 and d = infinity
/// behavior, block-partition coverage, keep rule and permutation invariance.
inline PropertyReport estimator_properties(std::size_t cases, std::uint64_t seed) {
  PropertyReport report;
  std::mt19937_64 rng(seed);
  const WaveletFamily families[] = {WaveletFamily::haar, WaveletFamily::daubechies4, WaveletFamily::daubechies6};
  const double ps[] = {2.0, 2.5, 3.0, 4.0};
  const NamedSignal signals[] = {NamedSignal::heavisine, NamedSignal::blocks, NamedSignal::bumps,
                                 NamedSignal::doppler, NamedSignal::zero};
  std::uniform_int_distribution<std::size_t> pick_n(512, 4096);
  std::uniform_int_distribution<int> pick3(0, 2), pick4(0, 3), pick5(0, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss;

  for (std::size_t c = 0; c < cases; ++c) {
    std::vector<std::string> errs;
    auto fail = [&](const std::string& what) { errs.push_back(what); };

    const auto& basis = cached_basis(families[pick3(rng)]);
    const std::size_t n = pick_n(rng);
    const double p = ps[pick4(rng)];
    DesignDensity density = DesignDensity::uniform();
    switch (pick3(rng)) {
      case 1: density = DesignDensity::linear_tilt(3.0 * unit(rng) - 1.5); break;
      case 2: {
        const double b = 0.2 + 0.6 * unit(rng);
        const double v0 = 0.3 + 1.2 * unit(rng);
        const double v1 = (1.0 - v0 * b) / (1.0 - b);
        if (v1 > 0.05) density = DesignDensity::piecewise_constant({0.0, b, 1.0}, {v0, v1});
        break;
      }
      default: break;
    }
    const NamedSignal sig = signals[pick5(rng)];
    const auto sample = generate_sample([sig](double t) { return eval_signal(sig, t); }, density, n, rng());
    std::ostringstream label;
    label << "case " << c << " (" << to_string(basis.family()) << ", n=" << n << ", p=" << p << ", "
          << density.describe() << ", " << to_string(sig) << "): ";

    const auto grid = block_grid(n, p, basis.tau());
    const auto emp = empirical_coefficients(sample, density, basis, grid);

    // partition coverage
    for (int j = grid.j1; j <= grid.j2; ++j) {
      std::int64_t next = 0;
      const auto& lv = grid.level(j);
      for (std::size_t b = 0; b < lv.size(); ++b) {
        if (lv[b].begin != next) fail("gap or overlap at level " + std::to_string(j));
        if (lv[b].size() < 1 || lv[b].size() > grid.L) fail("bad block size");
        if (b + 1 < lv.size() && lv[b].size() != grid.L) fail("only the last block may be short");
        next = lv[b].end;
      }
      if (next != (std::int64_t{1} << j)) fail("level " + std::to_string(j) + " not covered");
    }

    // keep rule and monotonicity in d
    const double d1 = 8.0 * unit(rng);
    const double d2 = d1 + 4.0 * unit(rng);
    const auto e1 = apply_blockshrink(emp, grid, d1, basis.family());
    const auto e2 = apply_blockshrink(emp, grid, d2, basis.family());
    if (e1.tree.alpha != emp.alpha) fail("scaling coefficients were thresholded");
    const double thr = d1 / std::sqrt(static_cast<double>(n));
    for (int j = grid.j1; j <= grid.j2; ++j) {
      const auto& lv = grid.level(j);
      for (std::size_t b = 0; b < lv.size(); ++b) {
        const auto raw = emp.level(j).subspan(static_cast<std::size_t>(lv[b].begin), static_cast<std::size_t>(lv[b].size()));
        const bool keep = block_statistic(raw, p) >= thr;
        const bool k1 = e1.kept_blocks[static_cast<std::size_t>(j - grid.j1)][b];
        const bool k2 = e2.kept_blocks[static_cast<std::size_t>(j - grid.j1)][b];
        if (k1 != keep) fail("keep decision disagrees with statistic >= d/sqrt(n)");
        if (k2 && !k1) fail("block kept at larger d but killed at smaller d");
        const auto out = e1.tree.level(j).subspan(static_cast<std::size_t>(lv[b].begin), static_cast<std::size_t>(lv[b].size()));
        for (std::size_t i = 0; i < out.size(); ++i) {
          if (k1 ? out[i] != raw[i] : out[i] != 0.0) fail("block contents do not match the decision");
        }
      }
    }

    // degenerate constants
    const auto keep_all = apply_blockshrink(emp, grid, 0.0, basis.family());
    if (!same_tree(keep_all.tree, emp)) fail("d = 0 changed the coefficients");
    for (const auto& lv : keep_all.kept_blocks) {
      if (std::find(lv.begin(), lv.end(), false) != lv.end()) fail("d = 0 killed a block");
    }
    const auto kill_all = apply_blockshrink(emp, grid, 1e9, basis.family());
    if (kill_all.tree.alpha != emp.alpha) fail("d = inf changed the scaling coefficients");
    for (const auto& lv : kill_all.tree.beta) {
      if (std::any_of(lv.begin(), lv.end(), [](double v) { return v != 0.0; })) fail("d = inf kept a detail");
    }

    // linearity in y; per-term products round separately, so allow a few ulps of the term scale
    Sample s1 = sample, s2 = sample, s12 = sample;
    double abs_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s2.y[i] = gauss(rng);
      s12.y[i] = s1.y[i] + s2.y[i];
      abs_scale += (std::fabs(s1.y[i]) + std::fabs(s2.y[i])) / density.g_min();
    }
    const auto c1 = empirical_coefficients(s1, density, basis, grid);
    const auto c2 = empirical_coefficients(s2, density, basis, grid);
    const auto c12 = empirical_coefficients(s12, density, basis, grid);
    double profile_sup = 0.0;
    for (double v : basis.psi_table()) profile_sup = std::max(profile_sup, std::fabs(v));
    for (double v : basis.phi_table()) profile_sup = std::max(profile_sup, std::fabs(v));
    const double tol = 8.0 * std::numeric_limits<double>::epsilon() * abs_scale / static_cast<double>(n) *
                       basis.support_length() * std::max(1.0, profile_sup) * std::exp2(0.5 * grid.j2);
    for (std::size_t k = 0; k < c1.alpha.size(); ++k) {
      if (std::fabs(c12.alpha[k] - c1.alpha[k] - c2.alpha[k]) > tol) fail("linearity fails for alpha");
    }
    for (int j = grid.j1; j <= grid.j2; ++j) {
      for (std::size_t k = 0; k < c1.level(j).size(); ++k) {
        if (std::fabs(c12.level(j)[k] - c1.level(j)[k] - c2.level(j)[k]) > tol) fail("linearity fails for beta");
      }
    }

    // permutation invariance, bit for bit
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Sample perm = sample;
    for (std::size_t i = 0; i < n; ++i) {
      perm.x[i] = sample.x[order[i]];
      perm.y[i] = sample.y[order[i]];
    }
    if (!same_tree(empirical_coefficients(perm, density, basis, grid), emp)) fail("permutation changed coefficients");

    ++report.cases;
    if (!errs.empty()) {
      ++report.failed_cases;
      if (report.failures.size() < 10) report.failures.push_back(label.str() + errs.front());
    }
  }
  return report;
}

struct OracleReport {
  std::size_t coefficients = 0;
  std::size_t outside = 0;
  double worst_z = 0.0;  // max |estimate - oracle| / SE
  std::string worst_label;
};

/// Noiseless heavisine sample of size n: every empirical coefficient at levels
/// j <= jtop against the quadrature value, in units of its own Monte Carlo SE
/// (sample std of the summands over sqrt n). Estimates come from the library
/// (scaling level j1 and details from empirical_coefficients, lower detail
/// levels from empirical_detail); the summands are recomputed with eval.
inline OracleReport oracle_equivalence(const DesignDensity& density, const WaveletBasis& basis, std::size_t n,
                                       int jtop, std::uint64_t seed, double z_limit = 3.0) {
  auto f = [](double t) { return eval_signal(NamedSignal::heavisine, t); };
  const auto sample = generate_sample(f, density, n, seed, NoiseModel::none);
  const auto grid = block_grid(n, 2.0, basis.tau());
  const auto emp = empirical_coefficients(sample, density, basis, grid);
  const auto fine = tabulate(f, std::size_t{1} << 20);
  const auto truth_base = exact_coefficients(basis, fine, grid.j1, std::max(grid.j1, jtop));
  const auto truth_low = exact_coefficients(basis, fine, basis.tau(), std::max(basis.tau(), jtop));

  OracleReport rep;
  auto check = [&](WaveletKind kind, int j, std::int64_t k, double est, double oracle) {
    long double m = 0;
    std::vector<double> terms(sample.n);
    for (std::size_t i = 0; i < sample.n; ++i) {
      terms[i] = sample.y[i] / density.pdf(sample.x[i]) * basis.eval(kind, j, k, sample.x[i]);
      m += terms[i];
    }
    m /= sample.n;
    long double v = 0;
    for (double t : terms) v += (t - m) * (t - m);
    v /= (sample.n - 1);
    const double se = std::sqrt(static_cast<double>(v) / static_cast<double>(sample.n));
    const double z = se > 0.0 ? std::fabs(est - oracle) / se : (std::fabs(est - oracle) < 1e-12 ? 0.0 : INFINITY);
    ++rep.coefficients;
    if (z > z_limit) ++rep.outside;
    if (z >= rep.worst_z) {
      rep.worst_z = z;
      rep.worst_label = std::string(kind == WaveletKind::mother ? "beta" : "alpha") + "_{" + std::to_string(j) +
                        "," + std::to_string(k) + "}";
    }
  };
  if (grid.j1 <= jtop) {
    for (std::int64_t k = 0; k < (std::int64_t{1} << grid.j1); ++k) {
      check(WaveletKind::father, grid.j1, k, emp.alpha[static_cast<std::size_t>(k)],
            truth_base.alpha[static_cast<std::size_t>(k)]);
    }
  }
  for (int j = basis.tau(); j <= jtop; ++j) {
    const std::int64_t count = std::int64_t{1} << j;
    std::vector<double> est;
    if (j >= grid.j1 && j <= grid.j2) {
      est.assign(emp.level(j).begin(), emp.level(j).end());
    } else {
      est = empirical_detail(sample, density, basis, j, 0, count);
    }
    for (std::int64_t k = 0; k < count; ++k) check(WaveletKind::mother, j, k, est[static_cast<std::size_t>(k)], truth_low.detail(j, k));
  }
  return rep;
}

struct RateSweepReport {
  std::size_t checked = 0;
  std::size_t critical = 0;
  std::size_t misclassified = 0;
  std::size_t exponent_mismatches = 0;
  std::size_t range_errors_missed = 0;  // out-of-range tuples that did not throw
};

namespace detail {

struct Frac {
  long long num, den;
};

// Sign of pi*s + (pi - p)/2 with every fraction cleared by hand.
inline int epsilon_sign(Frac pi, Frac s, Frac p) {
  const BigInt lhs = BigInt(2) * pi.num * s.num * p.den + BigInt(pi.num) * s.den * p.den;
  const BigInt rhs = BigInt(p.num) * pi.den * s.den;
  return lhs > rhs ? 1 : (lhs == rhs ? 0 : -1);
}

// s > 1/pi + 1/2 cleared the same way.
inline bool in_range(Frac pi, Frac s) { return BigInt(2) * s.num * pi.num > BigInt(s.den) * (2 * pi.den + pi.num); }

}  // namespace detail

/// Random rational tuples against an integer cross-multiplied sign oracle.
/// Every third draw is built to sit exactly on eps = 0, which needs
/// p > 2 pi + 2 to stay inside the theorem range.
inline RateSweepReport rate_tuple_sweep(std::size_t count, std::uint64_t seed) {
  using detail::Frac;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long long> num(1, 60), den(1, 12);
  RateSweepReport rep;
  const auto r_index = ExtendedRational::of(2);
  while (rep.checked < count) {
    Frac pi{num(rng), den(rng)};
    if (pi.num < pi.den) std::swap(pi.num, pi.den);  // pi >= 1
    Frac p{num(rng), den(rng)};
    if (p.num < 2 * p.den) p.num += 2 * p.den;
    Frac s{num(rng), den(rng)};
    if (rep.checked % 3 == 0) {
      // s = (p - pi) / (2 pi), p = 2 pi + 2 + q
      const Frac q{num(rng), den(rng)};
      p = {(2 * pi.num + 2 * pi.den) * q.den + q.num * pi.den, pi.den * q.den};
      s = {p.num * pi.den - pi.num * p.den, 2 * pi.num * p.den};
    }
    const Rational rs(s.num, s.den), rpi(pi.num, pi.den), rp(p.num, p.den);
    if (!detail::in_range(pi, s)) {
      try {
        (void)rate_spec(rs, ExtendedRational::of(rpi), r_index, rp);
        ++rep.range_errors_missed;
      } catch (const std::domain_error&) {
      }
      continue;
    }
    const auto r = rate_spec(rs, ExtendedRational::of(rpi), r_index, rp);
    const int sign = detail::epsilon_sign(pi, s, p);
    const RateZone expected = sign > 0 ? RateZone::regular : (sign == 0 ? RateZone::critical : RateZone::sparse);
    if (r.zone != expected) ++rep.misclassified;
    if (sign == 0) ++rep.critical;
    const Rational a1 = rs / (2 * rs + 1);
    const Rational a2 = (rs - 1 / rpi + 1 / rp) / (2 * (rs - 1 / rpi) + 1);
    if (r.risk_exponent != (sign > 0 ? Rational(-a1 * rp) : Rational(-a2 * rp))) ++rep.exponent_mismatches;
    ++rep.checked;
  }
  return rep;
}

}  // namespace checks
