#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "blockshrink/rational.hpp"
#include "blockshrink/wavelet_basis.hpp"

namespace blockshrink {

/// Besov ball B^s_{pi,r}(M).
struct BesovBallSpec {
  Rational s = 1;
  ExtendedRational pi = ExtendedRational::inf();
  ExtendedRational r = ExtendedRational::inf();
  double M = 1.0;

  /// s > 1/pi + 1/2, checked exactly.
  [[nodiscard]] bool theorem_applicable() const { return s > pi.reciprocal() + Rational(1, 2); }
  [[nodiscard]] Rational smoothness_floor() const { return pi.reciprocal() + Rational(1, 2); }
};

enum class RateZone { regular, sparse, critical };

inline std::string_view to_string(RateZone z) {
  switch (z) {
    case RateZone::regular: return "regular";
    case RateZone::sparse: return "sparse";
    case RateZone::critical: return "critical";
  }
  return "unknown";
}

/// Upper-bound rate phi_n = n^{risk_exponent} (log n)^{log_exponent}.
///
/// In the sparse and critical zones the (log n / n)^{alpha2 p} factor is
/// folded in: risk_exponent = -alpha2 p and its log part is counted in
/// log_exponent alongside `extra_log_exponent` = (p - pi/r)_+ when critical.
struct RateSpec {
  ExtendedRational epsilon;  // +inf when pi = inf
  RateZone zone = RateZone::regular;
  Rational alpha1;
  Rational alpha2;
  Rational risk_exponent;
  Rational log_exponent;
  Rational extra_log_exponent;

  [[nodiscard]] double risk_exponent_value() const { return to_double(risk_exponent); }
  [[nodiscard]] double log_exponent_value() const { return to_double(log_exponent); }
};

inline RateSpec rate_spec(const Rational& s, const ExtendedRational& pi, const ExtendedRational& r,
                          const Rational& p) {
  if (p < 2) throw std::domain_error("rate_spec: p must lie in [2, inf), got " + to_string(p));
  if (!pi.infinite && pi.value < 1) throw std::domain_error("rate_spec: pi must lie in [1, inf]");
  if (!r.infinite && r.value < 1) throw std::domain_error("rate_spec: r must lie in [1, inf]");
  const Rational inv_pi = pi.reciprocal();
  if (!(s > inv_pi + Rational(1, 2))) {
    throw std::domain_error("rate_spec: theorem range requires s > 1/pi + 1/2 = " +
                            to_string(inv_pi + Rational(1, 2)) + ", got s = " + to_string(s));
  }
  RateSpec out;
  out.alpha1 = s / (2 * s + 1);
  out.alpha2 = (s - inv_pi + Rational(1) / p) / (2 * (s - inv_pi) + 1);
  if (pi.infinite) {
    out.epsilon = ExtendedRational::inf();
    out.zone = RateZone::regular;
  } else {
    out.epsilon = ExtendedRational::of(pi.value * s + (pi.value - p) / 2);
    if (out.epsilon.value > 0) {
      out.zone = RateZone::regular;
    } else if (out.epsilon.value == 0) {
      out.zone = RateZone::critical;
    } else {
      out.zone = RateZone::sparse;
    }
  }

  if (out.zone == RateZone::regular) {
    out.risk_exponent = -out.alpha1 * p;
    const bool p_above_pi = !pi.infinite && p > pi.value;
    out.log_exponent = p_above_pi ? Rational(out.alpha1 * p) : Rational(0);
    out.extra_log_exponent = 0;
  } else {
    out.risk_exponent = -out.alpha2 * p;
    if (out.zone == RateZone::critical) {
      // pi is finite here; pi / inf = 0
      const Rational pi_over_r = r.infinite ? Rational(0) : Rational(pi.value / r.value);
      out.extra_log_exponent = std::max(Rational(p - pi_over_r), Rational(0));
    }
    out.log_exponent = out.alpha2 * p + out.extra_log_exponent;
  }
  return out;
}

inline RateSpec rate_spec(const BesovBallSpec& ball, const Rational& p) {
  return rate_spec(ball.s, ball.pi, ball.r, p);
}

namespace detail {

// [sum |c|^q]^{1/q}, or max |c| for q = inf, with rescaling against overflow.
template <class Range>
double lq_norm(const Range& values, double q) {
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0 || std::isinf(q)) return scale;
  double acc = 0.0;
  for (double v : values) acc += std::pow(std::fabs(v) / scale, q);
  return scale * std::pow(acc, 1.0 / q);
}

}  // namespace detail

/// Besov sequence norm of a finite tree,
/// [sum_j (2^{j(s+1/2-1/pi)} ||beta_j.||_pi)^r]^{1/r}, with the scaling
/// coefficients entering as level j0 - 1. Infinite indices become maxima.
inline double besov_seminorm(const CoefficientTree& tree, double s, double pi, double r) {
  if (!(s > 0.0)) throw std::invalid_argument("besov_seminorm: s must be positive");
  if (!(pi >= 1.0) || !(r >= 1.0)) throw std::invalid_argument("besov_seminorm: pi and r must be >= 1");
  tree.validate();
  const double inv_pi = std::isinf(pi) ? 0.0 : 1.0 / pi;
  const double weight_exp = s + 0.5 - inv_pi;
  std::vector<double> terms;
  terms.push_back(std::exp2((tree.j0 - 1) * weight_exp) * detail::lq_norm(tree.alpha, pi));
  for (int j = tree.j0; j <= tree.jmax; ++j) {
    terms.push_back(std::exp2(j * weight_exp) * detail::lq_norm(tree.level(j), pi));
  }
  return detail::lq_norm(terms, r);
}

}  // namespace blockshrink
