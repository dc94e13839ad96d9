#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "blockshrink/blockshrink.hpp"
#include "cli/config.hpp"
#include "cli/io.hpp"
#include "cli/report.hpp"

namespace blockshrink::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Bad input discovered after flag parsing (missing file, invalid combination).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<unsigned> threads;
};

inline void add_common(CLI::App* sub, CommonFlags& f, bool config_required) {
  auto* c = sub->add_option("--config", f.config, "JSON config file, or a manifest.json to replay");
  if (config_required) c->required();
  sub->add_option("--seed", f.seed, "Override master_seed");
  sub->add_option("--out-dir", f.out_dir, "Directory for outputs")->capture_default_str();
  sub->add_option("--threads", f.threads, "Worker threads for replications");
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", path.string() + " is not valid JSON: " + e.what());
  }
}

inline bool is_manifest(const json& j, const char* subcommand) {
  return j.is_object() && j.contains("subcommand") && j.at("subcommand") == subcommand && j.contains("config");
}

/// Collects outputs and writes manifest.json last.
class Manifest {
 public:
  Manifest(std::string subcommand, std::filesystem::path out_dir)
      : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)), started_(utc_now()),
        clock_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(out_dir_);
  }

  std::filesystem::path output(const std::string& name) {
    auto path = out_dir_ / name;
    outputs_.push_back(path.string());
    return path;
  }
  void input(const std::string& path) { inputs_.push_back(path); }

  std::filesystem::path write(const json& config, std::uint64_t master_seed, unsigned threads, int exit_code) {
    const auto path = output("manifest.json");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    json m{{"subcommand", subcommand_},
           {"artifact_version", std::string(kVersion)},
           {"master_seed", master_seed},
           {"config", config},
           {"started_utc", started_},
           {"finished_utc", utc_now()},
           {"wall_seconds", wall},
           {"threads", threads},
           {"exit_code", exit_code},
           {"inputs", inputs_},
           {"outputs", outputs_}};
    write_json(path, m);
    return path;
  }

 private:
  std::string subcommand_;
  std::filesystem::path out_dir_;
  std::string started_;
  std::chrono::steady_clock::time_point clock_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

struct FitOptions {
  std::string input;
  std::string density = "uniform";
  std::string basis = "haar";
  std::string p = "2";
  double d = 4.0;
  std::size_t grid = 0;  // output grid intervals; 0 picks the smallest valid power of two >= 1024
  int refine_depth = 12;
};

inline json fit_options_json(const FitOptions& o, const DesignDensity& density) {
  return {{"input", o.input},           {"density", density_to_json(density)}, {"basis", o.basis},
          {"p", o.p},                   {"d", o.d},                             {"grid", o.grid},
          {"refine_depth", o.refine_depth}};
}

inline std::string density_flag(const json& d) {
  if (d.is_string()) return d.get<std::string>();
  const auto kind = d.at("kind").get<std::string>();
  if (kind == "uniform") return kind;
  if (kind == "linear-tilt") return kind + ":" + format_double(d.at("slope").get<double>());
  std::string out = kind + ":";
  const auto breaks = d.at("breaks").get<std::vector<double>>();
  const auto values = d.at("values").get<std::vector<double>>();
  for (std::size_t i = 0; i < breaks.size(); ++i) out += (i ? "," : "") + format_double(breaks[i]);
  out += ":";
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

inline int run_fit(CLI::App* sub, const CommonFlags& common, FitOptions opts, std::ostream& out) {
  std::uint64_t seed = 1;
  if (!common.config.empty()) {
    const auto root = read_json_file(common.config);
    if (is_manifest(root, "fit")) {
      const auto& c = root.at("config");
      detail::reject_unknown(c, {"input", "density", "basis", "p", "d", "grid", "refine_depth"}, "config.");
      if (sub->count("--input") == 0 && c.contains("input")) opts.input = c.at("input").get<std::string>();
      if (sub->count("--density") == 0 && c.contains("density")) opts.density = density_flag(c.at("density"));
      if (sub->count("--basis") == 0 && c.contains("basis")) opts.basis = c.at("basis").get<std::string>();
      if (sub->count("--p") == 0 && c.contains("p")) opts.p = to_string(detail::to_rational(c.at("p"), "p"));
      if (sub->count("--d") == 0 && c.contains("d")) opts.d = c.at("d").get<double>();
      if (sub->count("--grid") == 0 && c.contains("grid")) opts.grid = c.at("grid").get<std::size_t>();
      if (sub->count("--refine-depth") == 0 && c.contains("refine_depth")) opts.refine_depth = c.at("refine_depth").get<int>();
      seed = root.value("master_seed", seed);
    } else {
      const auto cfg = config_from_json(root.is_object() && root.contains("subcommand") ? root.at("config") : root);
      if (sub->count("--density") == 0) opts.density = density_flag(density_to_json(cfg.density));
      if (sub->count("--basis") == 0) opts.basis = std::string(to_string(cfg.family));
      if (sub->count("--p") == 0) opts.p = to_string(cfg.p);
      if (sub->count("--d") == 0) opts.d = cfg.d;
      if (sub->count("--refine-depth") == 0) opts.refine_depth = cfg.refine_depth;
      seed = cfg.master_seed;
    }
  }
  if (common.seed) seed = *common.seed;
  if (opts.input.empty()) throw UsageError("fit: --input is required (or a fit manifest via --config)");

  const auto density = parse_density_flag(opts.density);
  WaveletFamily family;
  try {
    family = parse_family(opts.basis);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("basis", e.what());
  }
  Rational p_exact;
  try {
    p_exact = parse_rational(opts.p);
  } catch (const std::exception& e) {
    throw ConfigError("p", e.what());
  }
  if (p_exact < 2) throw ConfigError("p", "must lie in [2, inf), got " + to_string(p_exact));
  if (!(opts.d >= 0.0) || !std::isfinite(opts.d)) throw ConfigError("d", "must be a finite value >= 0");
  if (opts.refine_depth < WaveletBasis::kMinRefineDepth) {
    throw ConfigError("refine_depth", "must be >= " + std::to_string(WaveletBasis::kMinRefineDepth));
  }

  Sample sample;
  try {
    sample = read_sample_csv(opts.input);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  for (double x : sample.x) {
    if (!(x >= 0.0 && x <= 1.0)) throw UsageError(opts.input + ": x values must lie in [0, 1]");
  }
  const auto basis = make_basis(family, opts.refine_depth);
  const double p = to_double(p_exact);
  const auto est = blockshrink(sample, density, basis, p, opts.d);

  const std::size_t required = std::size_t{1} << (std::max(est.tree.jmax, est.tree.j0) + 2);
  std::size_t grid = opts.grid;
  if (grid == 0) grid = std::max<std::size_t>(1024, required);
  if (!is_power_of_two(grid) || grid < required) {
    throw ConfigError("grid", "must be a power of two >= " + std::to_string(required) + " for this sample size");
  }
  opts.grid = grid;

  Manifest manifest("fit", common.out_dir);
  manifest.input(opts.input);
  write_estimate_csv(manifest.output("estimate.csv"), synthesize(basis, est.tree, grid));
  write_block_csv(manifest.output("blocks.csv"), est);
  manifest.write(fit_options_json(opts, density), seed, 1, kExitOk);

  std::size_t kept = 0;
  for (const auto& d : est.decisions) kept += d.kept ? 1 : 0;
  out << "fit: n=" << sample.n << " basis=" << to_string(family) << " p=" << to_string(p_exact) << " d=" << opts.d
      << "\n  levels j1=" << est.grid.j1 << " j2=" << est.grid.j2 << " L=" << est.grid.L << "\n  blocks kept "
      << kept << " of " << est.decisions.size() << "\n";
  if (est.grid.j1_clamped_to_j2) out << "  warning: coarse level clamped to j2 at this sample size\n";
  out << "  wrote " << (std::filesystem::path(common.out_dir) / "estimate.csv").string() << "\n";
  return kExitOk;
}

inline int run_basis(CLI::App* sub, const CommonFlags& common, std::string basis_name, int refine_depth,
                     std::ostream& out) {
  std::uint64_t seed = 1;
  if (!common.config.empty()) {
    const auto root = read_json_file(common.config);
    const json& c = root.is_object() && root.contains("subcommand") ? root.at("config") : root;
    if (sub->count("--basis") == 0 && c.contains("basis")) basis_name = c.at("basis").get<std::string>();
    if (sub->count("--refine-depth") == 0 && c.contains("refine_depth")) refine_depth = c.at("refine_depth").get<int>();
    seed = root.value("master_seed", seed);
  }
  if (common.seed) seed = *common.seed;
  WaveletFamily family;
  try {
    family = parse_family(basis_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("basis", e.what());
  }
  if (refine_depth < WaveletBasis::kMinRefineDepth || refine_depth > 20) {
    throw ConfigError("refine_depth", "must lie in [" + std::to_string(WaveletBasis::kMinRefineDepth) + ", 20]");
  }
  const auto basis = make_basis(family, refine_depth);
  Manifest manifest("basis", common.out_dir);
  write_basis_csv(manifest.output("basis.csv"), basis);
  manifest.write({{"basis", std::string(to_string(family))}, {"refine_depth", refine_depth}}, seed, 1, kExitOk);
  out << "basis: " << to_string(family) << " support [0, " << basis.support_length() << "] tau=" << basis.tau()
      << " depth=" << basis.refine_depth() << " rows=" << basis.phi_table().size() << "\n";
  return kExitOk;
}

inline ExperimentConfig resolve_experiment(const CommonFlags& common) {
  auto cfg = parse_config(common.config);
  if (common.seed) cfg.master_seed = *common.seed;
  if (common.threads) cfg.threads = *common.threads;
  return cfg;
}

inline int run_rates(const CommonFlags& common, std::ostream& out) {
  const auto cfg = resolve_experiment(common);
  Manifest manifest("rates", common.out_dir);
  manifest.input(common.config);
  const auto report = run_rate_experiment(cfg);
  write_json(manifest.output("report.json"), to_json(report));
  write_rates_csv(manifest.output("rates.csv"), report);
  const int code = report.pass ? kExitOk : kExitCheckFailed;
  manifest.write(config_to_json(cfg), cfg.master_seed, cfg.threads, code);

  out << "rates: signal=" << report.signal << " density=" << report.density << " basis=" << report.family
      << " p=" << report.p << " d=" << report.d << " R=" << report.replications << "\n";
  out << "       n      mean_risk         stderr   j1  j2   L   kept   hard_risk   soft_risk\n";
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& pt = report.points[i];
    const auto& cmp = report.comparison[i];
    char line[160];
    std::snprintf(line, sizeof(line), "%8zu %14.6e %14.6e %4d %3d %3lld %6.3f %11.4e %11.4e\n", pt.n, pt.mean_risk,
                  pt.std_error, pt.j1, pt.j2, static_cast<long long>(pt.L), pt.kept_fraction, cmp.hard, cmp.soft);
    out << line;
  }
  out << "  fitted slope " << report.fit.slope << " (se " << report.fit.std_error << "), " << report.theory.kind
      << " exponent " << report.theory.exponent << ", tolerance " << report.tolerance << "\n";
  out << "  hard/soft columns are descriptive only\n";
  out << (report.pass ? "PASS" : "FAIL") << "\n";
  return code;
}

inline int run_diagnose(const CommonFlags& common, std::ostream& out) {
  const auto cfg = resolve_experiment(common);
  Manifest manifest("diagnose", common.out_dir);
  manifest.input(common.config);
  const auto moment = check_moment_bound(cfg, cfg.moment.j, cfg.moment.k);
  const auto conc = check_concentration(cfg, cfg.concentration.j, cfg.concentration.K, cfg.concentration.mu_sweep);

  // The envelope comparison is descriptive: the constant mu1 is not known.
  const bool pass = moment.pass && conc.nested && conc.median_scaling_ok;
  json report{{"signal", describe(cfg.signal)},
              {"density", cfg.density.describe()},
              {"basis", std::string(to_string(cfg.family))},
              {"replications", cfg.replications},
              {"master_seed", cfg.master_seed},
              {"moment", to_json(moment)},
              {"concentration", to_json(conc)},
              {"pass", pass}};
  write_json(manifest.output("report.json"), report);
  write_moment_csv(manifest.output("moment.csv"), moment);
  write_concentration_csv(manifest.output("concentration.csv"), conc);
  const int code = pass ? kExitOk : kExitCheckFailed;
  manifest.write(config_to_json(cfg), cfg.master_seed, cfg.threads, code);

  out << "diagnose: signal=" << describe(cfg.signal) << " R=" << cfg.replications << "\n";
  out << "  moment E|b-beta|^" << 2 * moment.p << " at (j,k)=(" << moment.j << "," << moment.k << "): slope "
      << moment.fit.slope << " target " << moment.target_slope << " +/- " << moment.tolerance << " -> "
      << (moment.pass ? "ok" : "off") << "\n";
  out << "  concentration at (j,K)=(" << conc.j << "," << conc.K << "): nested=" << (conc.nested ? "yes" : "no")
      << " median slope " << conc.median_fit.slope << " (target -0.5) -> " << (conc.median_scaling_ok ? "ok" : "off")
      << "\n";
  auto show = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("none in sweep"); };
  out << "  smallest mu under 4n^-p: point " << show(conc.smallest_mu_point) << ", Wilson upper "
      << show(conc.smallest_mu_wilson) << "\n";
  out << (pass ? "PASS" : "FAIL") << "\n";
  return code;
}

}  // namespace detail

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Block-thresholded wavelet regression for random designs", "blockshrink"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  detail::CommonFlags fit_common, basis_common, rates_common, diag_common;
  detail::FitOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "Denoise one sample file");
  detail::add_common(fit, fit_common, false);
  fit->add_option("--input", fit_opts.input, "Sample CSV with header x,y");
  fit->add_option("--density", fit_opts.density,
                  "uniform | linear-tilt:<slope> | piecewise-constant:<breaks>:<values>")
      ->capture_default_str();
  fit->add_option("--basis", fit_opts.basis, "haar | daubechies4 | daubechies6")->capture_default_str();
  fit->add_option("--p", fit_opts.p, "Loss exponent, >= 2 (rational allowed, e.g. 5/2)")->capture_default_str();
  fit->add_option("--d", fit_opts.d, "Block threshold constant")->capture_default_str();
  fit->add_option("--grid", fit_opts.grid, "Output grid intervals (power of two; 0 = automatic)")
      ->capture_default_str();
  fit->add_option("--refine-depth", fit_opts.refine_depth, "Cascade depth for tabulated wavelets")
      ->capture_default_str();

  std::string basis_name = "haar";
  int refine_depth = 12;
  auto* basis = app.add_subcommand("basis", "Dump phi/psi tables as CSV");
  detail::add_common(basis, basis_common, false);
  basis->add_option("--basis", basis_name, "haar | daubechies4 | daubechies6")->capture_default_str();
  basis->add_option("--refine-depth", refine_depth, "Cascade depth")->capture_default_str();

  auto* rates = app.add_subcommand("rates", "Monte Carlo risk slope experiment");
  detail::add_common(rates, rates_common, true);
  auto* diagnose = app.add_subcommand("diagnose", "Coefficient moment and concentration checks");
  detail::add_common(diagnose, diag_common, true);

  if (argc > 1 && argv[1][0] != '-') {
    const std::string name = argv[1];
    if (name != "fit" && name != "basis" && name != "rates" && name != "diagnose") {
      err << "error: unknown subcommand '" << name << "'\n\n" << app.help();
      return kExitUsage;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return detail::run_fit(fit, fit_common, fit_opts, out);
    if (basis->parsed()) return detail::run_basis(basis, basis_common, basis_name, refine_depth, out);
    if (rates->parsed()) return detail::run_rates(rates_common, out);
    if (diagnose->parsed()) return detail::run_diagnose(diag_common, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace blockshrink::cli
