#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "blockshrink/harness.hpp"
#include "blockshrink/rational.hpp"

namespace blockshrink::cli {

using json = nlohmann::ordered_json;

/// Configuration problem; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError(prefix + key, "unknown key");
  }
}

inline Rational to_rational(const json& v, const std::string& field) {
  try {
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_number_float()) return rational_from_double(v.get<double>());
    if (v.is_string()) return parse_rational(v.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
  throw ConfigError(field, "expected a number or a rational string like \"7/18\"");
}

inline ExtendedRational to_extended(const json& v, const std::string& field) {
  if (v.is_string()) {
    try {
      return parse_extended(v.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(field, e.what());
    }
  }
  return ExtendedRational::of(to_rational(v, field));
}

inline json extended_to_json(const ExtendedRational& v) { return v.str(); }

template <class T>
T get_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
      throw ConfigError(field, "expected a nonnegative integer");
    }
  }
  return v.get<T>();
}

}  // namespace detail

/// "uniform", "linear-tilt:0.5", "piecewise-constant:0,0.5,1:0.5,1.5"
inline DesignDensity parse_density_flag(const std::string& text) {
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t pos; (pos = s.find(sep, start)) != std::string::npos; start = pos + 1) {
      out.push_back(s.substr(start, pos - start));
    }
    out.push_back(s.substr(start));
    return out;
  };
  const auto parts = split(text, ':');
  try {
    if (parts[0] == "uniform" && parts.size() == 1) return DesignDensity::uniform();
    if (parts[0] == "linear-tilt" && parts.size() == 2) return DesignDensity::linear_tilt(std::stod(parts[1]));
    if (parts[0] == "piecewise-constant" && parts.size() == 3) {
      std::vector<double> breaks, values;
      for (const auto& b : split(parts[1], ',')) breaks.push_back(std::stod(b));
      for (const auto& v : split(parts[2], ',')) values.push_back(std::stod(v));
      return DesignDensity::piecewise_constant(breaks, values);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("density", e.what());
  }
  throw ConfigError("density",
                    "expected uniform | linear-tilt:<slope> | piecewise-constant:<breaks>:<values>, got '" + text + "'");
}

inline DesignDensity parse_density(const json& v) {
  if (v.is_string()) return parse_density_flag(v.get<std::string>());
  if (!v.is_object() || !v.contains("kind")) throw ConfigError("density", "expected a string or an object with 'kind'");
  const auto kind = v.at("kind").get<std::string>();
  try {
    if (kind == "uniform") {
      detail::reject_unknown(v, {"kind"}, "density.");
      return DesignDensity::uniform();
    }
    if (kind == "linear-tilt") {
      detail::reject_unknown(v, {"kind", "slope"}, "density.");
      if (!v.contains("slope")) throw ConfigError("density.slope", "required for linear-tilt");
      return DesignDensity::linear_tilt(detail::get_number<double>(v.at("slope"), "density.slope"));
    }
    if (kind == "piecewise-constant") {
      detail::reject_unknown(v, {"kind", "breaks", "values"}, "density.");
      return DesignDensity::piecewise_constant(v.at("breaks").get<std::vector<double>>(),
                                               v.at("values").get<std::vector<double>>());
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("density", e.what());
  } catch (const json::exception& e) {
    throw ConfigError("density", e.what());
  }
  throw ConfigError("density.kind", "unknown density kind '" + kind + "'");
}

inline json density_to_json(const DesignDensity& d) {
  switch (d.kind()) {
    case DensityKind::uniform: return json{{"kind", "uniform"}};
    case DensityKind::linear_tilt: return json{{"kind", "linear-tilt"}, {"slope", d.slope()}};
    case DensityKind::piecewise_constant:
      return json{{"kind", "piecewise-constant"}, {"breaks", d.breaks()}, {"values", d.values()}};
  }
  return json{};
}

inline SignalSpec parse_signal_spec(const json& v) {
  if (v.is_string()) {
    try {
      return parse_signal(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("signal", e.what());
    }
  }
  if (v.is_object() && v.contains("random_besov")) {
    detail::reject_unknown(v, {"random_besov"}, "signal.");
    const auto& rb = v.at("random_besov");
    detail::reject_unknown(rb, {"s", "pi", "r", "seed"}, "signal.random_besov.");
    RandomBesovSpec spec;
    if (!rb.contains("s") || !rb.contains("pi")) throw ConfigError("signal.random_besov", "requires s and pi");
    spec.s = detail::to_rational(rb.at("s"), "signal.random_besov.s");
    spec.pi = detail::to_extended(rb.at("pi"), "signal.random_besov.pi");
    spec.r = rb.contains("r") ? detail::to_extended(rb.at("r"), "signal.random_besov.r") : spec.pi;
    if (rb.contains("seed")) spec.seed = detail::get_number<std::uint64_t>(rb.at("seed"), "signal.random_besov.seed");
    return spec;
  }
  throw ConfigError("signal", "expected a signal name or {\"random_besov\": {...}}");
}

inline json signal_to_json(const SignalSpec& spec) {
  if (const auto* named = std::get_if<NamedSignal>(&spec)) return std::string(to_string(*named));
  const auto& rb = std::get<RandomBesovSpec>(spec);
  return json{{"random_besov",
               {{"s", to_string(rb.s)}, {"pi", rb.pi.str()}, {"r", rb.r.str()}, {"seed", rb.seed}}}};
}

inline ExperimentConfig config_from_json(const json& root) {
  if (!root.is_object()) throw ConfigError("config", "top level must be a JSON object");
  detail::reject_unknown(root,
                         {"signal", "smoothness", "density", "basis", "refine_depth", "p", "d", "n_grid",
                          "replications", "master_seed", "risk_grid", "threads", "noise", "slope_tolerance",
                          "term_c", "moment", "concentration"},
                         "");
  ExperimentConfig c;
  try {
    if (root.contains("signal")) c.signal = parse_signal_spec(root.at("signal"));
    if (root.contains("smoothness")) {
      const auto& sm = root.at("smoothness");
      detail::reject_unknown(sm, {"s", "pi", "r", "M"}, "smoothness.");
      if (!sm.contains("s") || !sm.contains("pi")) throw ConfigError("smoothness", "requires s and pi");
      BesovBallSpec ball;
      ball.s = detail::to_rational(sm.at("s"), "smoothness.s");
      ball.pi = detail::to_extended(sm.at("pi"), "smoothness.pi");
      ball.r = sm.contains("r") ? detail::to_extended(sm.at("r"), "smoothness.r") : ball.pi;
      if (sm.contains("M")) ball.M = detail::get_number<double>(sm.at("M"), "smoothness.M");
      c.smoothness = ball;
    }
    if (root.contains("density")) c.density = parse_density(root.at("density"));
    if (root.contains("basis")) {
      try {
        c.family = parse_family(root.at("basis").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError("basis", e.what());
      }
    }
    if (root.contains("refine_depth")) c.refine_depth = detail::get_number<int>(root.at("refine_depth"), "refine_depth");
    if (root.contains("p")) c.p = detail::to_rational(root.at("p"), "p");
    if (root.contains("d")) c.d = detail::get_number<double>(root.at("d"), "d");
    if (root.contains("n_grid")) {
      const auto& ng = root.at("n_grid");
      if (!ng.is_array()) throw ConfigError("n_grid", "expected an array of sample sizes");
      for (const auto& v : ng) c.n_grid.push_back(detail::get_number<std::size_t>(v, "n_grid"));
    }
    if (root.contains("replications")) {
      c.replications = detail::get_number<std::size_t>(root.at("replications"), "replications");
    }
    if (root.contains("master_seed")) c.master_seed = detail::get_number<std::uint64_t>(root.at("master_seed"), "master_seed");
    if (root.contains("risk_grid")) c.risk_grid = detail::get_number<std::size_t>(root.at("risk_grid"), "risk_grid");
    if (root.contains("threads")) c.threads = detail::get_number<unsigned>(root.at("threads"), "threads");
    if (root.contains("noise")) {
      const auto noise = root.at("noise").get<std::string>();
      if (noise == "gaussian") {
        c.noise = NoiseModel::gaussian;
      } else if (noise == "none") {
        c.noise = NoiseModel::none;
      } else {
        throw ConfigError("noise", "expected gaussian or none");
      }
    }
    if (root.contains("slope_tolerance")) {
      c.slope_tolerance = detail::get_number<double>(root.at("slope_tolerance"), "slope_tolerance");
    }
    if (root.contains("term_c")) c.term_c = detail::get_number<double>(root.at("term_c"), "term_c");
    if (root.contains("moment")) {
      const auto& m = root.at("moment");
      detail::reject_unknown(m, {"j", "k", "tolerance"}, "moment.");
      if (m.contains("j")) c.moment.j = detail::get_number<int>(m.at("j"), "moment.j");
      if (m.contains("k")) c.moment.k = detail::get_number<std::int64_t>(m.at("k"), "moment.k");
      if (m.contains("tolerance")) c.moment.tolerance = detail::get_number<double>(m.at("tolerance"), "moment.tolerance");
    }
    if (root.contains("concentration")) {
      const auto& m = root.at("concentration");
      detail::reject_unknown(m, {"j", "K", "mu", "calibrated_mu", "median_slope_tolerance"}, "concentration.");
      if (m.contains("j")) c.concentration.j = detail::get_number<int>(m.at("j"), "concentration.j");
      if (m.contains("K")) c.concentration.K = detail::get_number<std::int64_t>(m.at("K"), "concentration.K");
      if (m.contains("mu")) c.concentration.mu_sweep = m.at("mu").get<std::vector<double>>();
      if (m.contains("calibrated_mu")) {
        c.concentration.calibrated_mu = detail::get_number<double>(m.at("calibrated_mu"), "concentration.calibrated_mu");
      }
      if (m.contains("median_slope_tolerance")) {
        c.concentration.median_slope_tolerance =
            detail::get_number<double>(m.at("median_slope_tolerance"), "concentration.median_slope_tolerance");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("config", e.what());
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(colon == std::string::npos ? "config" : msg.substr(0, colon),
                      colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  return c;
}

/// Reads a JSON config file. A run manifest is accepted too: its resolved
/// "config" section is used, which is how runs are replayed.
inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", path.string() + " is not valid JSON: " + e.what());
  }
  if (root.is_object() && root.contains("subcommand") && root.contains("config")) return config_from_json(root.at("config"));
  return config_from_json(root);
}

inline json config_to_json(const ExperimentConfig& c) {
  json out;
  out["signal"] = signal_to_json(c.signal);
  if (c.smoothness) {
    out["smoothness"] = {{"s", to_string(c.smoothness->s)},
                         {"pi", c.smoothness->pi.str()},
                         {"r", c.smoothness->r.str()},
                         {"M", c.smoothness->M}};
  }
  out["density"] = density_to_json(c.density);
  out["basis"] = std::string(to_string(c.family));
  out["refine_depth"] = c.refine_depth;
  out["p"] = to_string(c.p);
  out["d"] = c.d;
  out["n_grid"] = c.n_grid;
  out["replications"] = c.replications;
  out["master_seed"] = c.master_seed;
  out["risk_grid"] = c.risk_grid;
  out["threads"] = c.threads;
  out["noise"] = c.noise == NoiseModel::gaussian ? "gaussian" : "none";
  out["slope_tolerance"] = c.slope_tolerance;
  out["term_c"] = c.term_c;
  out["moment"] = {{"j", c.moment.j}, {"k", c.moment.k}, {"tolerance", c.moment.tolerance}};
  out["concentration"] = {{"j", c.concentration.j},
                          {"K", c.concentration.K},
                          {"mu", c.concentration.mu_sweep},
                          {"calibrated_mu", c.concentration.calibrated_mu},
                          {"median_slope_tolerance", c.concentration.median_slope_tolerance}};
  return out;
}

}  // namespace blockshrink::cli
