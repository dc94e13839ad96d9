#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockshrink/design.hpp"
#include "blockshrink/estimator.hpp"
#include "blockshrink/grid.hpp"
#include "blockshrink/wavelet_basis.hpp"

namespace blockshrink::cli {

/// Shortest round-trip formatting, so CSV output is byte-stable.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return {buf, ptr};
}

inline double parse_double(const std::string& field, const std::string& where) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw std::runtime_error(where + ": not a number: '" + field + "'");
  return v;
}

/// Reads a sample CSV with header `x,y`.
inline Sample read_sample_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sample file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y") throw std::runtime_error(path.string() + ": header must be 'x,y'");
  Sample s;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path.string() + ":" + std::to_string(row) + ": expected x,y");
    const std::string where = path.string() + ":" + std::to_string(row);
    s.x.push_back(parse_double(line.substr(0, comma), where));
    s.y.push_back(parse_double(line.substr(comma + 1), where));
  }
  s.n = s.x.size();
  if (s.n == 0) throw std::runtime_error(path.string() + ": no observations");
  s.validate();
  return s;
}

inline void write_sample_csv(const std::filesystem::path& path, const Sample& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x,y\n";
  for (std::size_t i = 0; i < s.n; ++i) out << format_double(s.x[i]) << ',' << format_double(s.y[i]) << '\n';
}

inline void write_estimate_csv(const std::filesystem::path& path, const GridFunction& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x,fhat\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << format_double(values.x(i)) << ',' << format_double(values.values[i]) << '\n';
  }
}

inline void write_block_csv(const std::filesystem::path& path, const Estimate& est) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "j,K,statistic,threshold,kept\n";
  for (const auto& d : est.decisions) {
    out << d.j << ',' << d.K << ',' << format_double(d.statistic) << ',' << format_double(d.threshold) << ','
        << (d.kept ? 1 : 0) << '\n';
  }
}

inline void write_basis_csv(const std::filesystem::path& path, const WaveletBasis& basis) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x,phi,psi\n";
  const auto phi = basis.phi_table();
  const auto psi = basis.psi_table();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    out << format_double(static_cast<double>(i) * basis.table_step()) << ',' << format_double(phi[i]) << ','
        << format_double(psi[i]) << '\n';
  }
}

}  // namespace blockshrink::cli
