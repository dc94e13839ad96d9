#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "cli/config.hpp"
#include "cli/io.hpp"

namespace blockshrink::cli {

namespace detail {
// nlohmann writes non-finite doubles as null; keep that explicit.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline json opt(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }
}  // namespace detail

inline json to_json(const RateFit& f) {
  return {{"slope", detail::num(f.slope)}, {"intercept", detail::num(f.intercept)}, {"std_error", detail::num(f.std_error)}};
}

inline json to_json(const RateSpec& r) {
  return {{"epsilon", r.epsilon.str()},
          {"zone", std::string(to_string(r.zone))},
          {"alpha1", to_string(r.alpha1)},
          {"alpha2", to_string(r.alpha2)},
          {"risk_exponent", to_string(r.risk_exponent)},
          {"log_exponent", to_string(r.log_exponent)},
          {"extra_log_exponent", to_string(r.extra_log_exponent)}};
}

inline json to_json(const TheoryTarget& t) {
  json out{{"kind", t.kind}, {"exponent", detail::num(t.exponent)}, {"log_exponent", detail::num(t.log_exponent)}};
  out["rate"] = t.rate ? to_json(*t.rate) : json(nullptr);
  if (t.ball) {
    out["ball"] = {{"s", to_string(t.ball->s)}, {"pi", t.ball->pi.str()}, {"r", t.ball->r.str()}, {"M", detail::num(t.ball->M)}};
  } else {
    out["ball"] = nullptr;
  }
  return out;
}

inline json to_json(const RiskReport& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"n", p.n},
                      {"j1", p.j1},
                      {"j2", p.j2},
                      {"L", p.L},
                      {"mean_risk", detail::num(p.mean_risk)},
                      {"std_error", detail::num(p.std_error)},
                      {"kept_fraction", detail::num(p.kept_fraction)}});
  }
  json comparison = json::array();
  for (const auto& c : r.comparison) {
    comparison.push_back({{"n", c.n},
                          {"block", detail::num(c.block)},
                          {"hard", detail::num(c.hard)},
                          {"soft", detail::num(c.soft)}});
  }
  return {{"signal", r.signal},
          {"density", r.density},
          {"basis", r.family},
          {"p", r.p},
          {"d", r.d},
          {"replications", r.replications},
          {"master_seed", r.master_seed},
          {"points", points},
          {"fit", to_json(r.fit)},
          {"theory", to_json(r.theory)},
          {"tolerance", r.tolerance},
          {"pass", r.pass},
          {"comparison", comparison}};
}

inline json to_json(const MomentReport& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"n", p.n},
                      {"truth", detail::num(p.truth)},
                      {"moment", detail::num(p.moment)},
                      {"std_error", detail::num(p.std_error)}});
  }
  return {{"j", r.j},        {"k", r.k},
          {"p", r.p},        {"points", points},
          {"fit", to_json(r.fit)}, {"target_slope", r.target_slope},
          {"tolerance", r.tolerance}, {"pass", r.pass}};
}

inline json to_json(const ConcentrationReport& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    json cells = json::array();
    for (const auto& c : p.cells) {
      cells.push_back({{"mu", c.mu},
                       {"events", c.events},
                       {"frequency", c.frequency},
                       {"wilson_lower", c.wilson.lower},
                       {"wilson_upper", c.wilson.upper},
                       {"point_within_envelope", c.point_within_envelope},
                       {"wilson_within_envelope", c.wilson_within_envelope}});
    }
    points.push_back({{"n", p.n},
                      {"block_size", p.block_size},
                      {"envelope", p.envelope},
                      {"median_deviation", detail::num(p.median_deviation)},
                      {"cells", cells}});
  }
  return {{"j", r.j},
          {"K", r.K},
          {"p", r.p},
          {"replications", r.replications},
          {"points", points},
          {"nested", r.nested},
          {"smallest_mu_wilson", detail::opt(r.smallest_mu_wilson)},
          {"smallest_mu_point", detail::opt(r.smallest_mu_point)},
          {"median_fit", to_json(r.median_fit)},
          {"median_slope_tolerance", r.median_slope_tolerance},
          {"median_scaling_ok", r.median_scaling_ok}};
}

inline void write_json(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << value.dump(2) << '\n';
}

/// Plot data: n, mean_risk, stderr, theory_exponent.
inline void write_rates_csv(const std::filesystem::path& path, const RiskReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "n,mean_risk,stderr,theory_exponent\n";
  for (const auto& p : r.points) {
    out << p.n << ',' << format_double(p.mean_risk) << ',' << format_double(p.std_error) << ','
        << format_double(r.theory.exponent) << '\n';
  }
}

/// Same schema for the moment curve; the "risk" column holds E|beta_hat - beta|^{2p}.
inline void write_moment_csv(const std::filesystem::path& path, const MomentReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "n,mean_risk,stderr,theory_exponent\n";
  for (const auto& p : r.points) {
    out << p.n << ',' << format_double(p.moment) << ',' << format_double(p.std_error) << ','
        << format_double(r.target_slope) << '\n';
  }
}

inline void write_concentration_csv(const std::filesystem::path& path, const ConcentrationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "n,mu,events,frequency,wilson_lower,wilson_upper,envelope\n";
  for (const auto& p : r.points) {
    for (const auto& c : p.cells) {
      out << p.n << ',' << format_double(c.mu) << ',' << c.events << ',' << format_double(c.frequency) << ','
          << format_double(c.wilson.lower) << ',' << format_double(c.wilson.upper) << ',' << format_double(p.envelope)
          << '\n';
    }
  }
}

}  // namespace blockshrink::cli
