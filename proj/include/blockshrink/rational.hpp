#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cctype>
#include <charconv>
#include <limits>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace blockshrink {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "3", "-2.5", "1e-3", "7/18" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("not a rational number: '" + std::string(text) + "'");
  };
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) return fail();

  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_rational(text.substr(0, slash));
    const Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) return fail();
    return num / den;
  }

  bool negative = false;
  std::size_t i = 0;
  if (text[i] == '+' || text[i] == '-') negative = text[i++] == '-';
  BigInt digits = 0;
  int scale = 0;
  bool any = false;
  bool dot = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      digits = digits * 10 + (c - '0');
      any = true;
      if (dot) ++scale;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) return fail();
  long exponent = 0;
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') return fail();
    ++i;
    const char* first = text.data() + i;
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, exponent);
    if (ec != std::errc{} || ptr != last || std::labs(exponent) > 4000) return fail();
  }
  exponent -= scale;
  BigInt pow10 = 1;
  for (long e = 0; e < std::labs(exponent); ++e) pow10 *= 10;
  Rational r = exponent >= 0 ? Rational(digits * pow10) : Rational(digits, pow10);
  return negative ? Rational(-r) : r;
}

/// Rational with the shortest decimal that round-trips to `v` (so 0.1 -> 1/10).
inline Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("rational_from_double: non-finite value");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::invalid_argument("rational_from_double: formatting failed");
  return parse_rational(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

/// Shortest decimal that round-trips the nearest double, e.g. 3/2 -> "1.5".
inline std::string format_decimal(const Rational& r) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), to_double(r));
  if (ec != std::errc{}) throw std::invalid_argument("format_decimal: formatting failed");
  return {buf.data(), ptr};
}

/// A rational in [0, inf) extended by +infinity; Besov shape and fine indices.
struct ExtendedRational {
  Rational value = 0;
  bool infinite = false;

  static ExtendedRational inf() { return {0, true}; }
  static ExtendedRational of(Rational v) { return {std::move(v), false}; }

  [[nodiscard]] double to_double() const {
    return infinite ? std::numeric_limits<double>::infinity() : blockshrink::to_double(value);
  }
  /// 1/x with 1/inf = 0.
  [[nodiscard]] Rational reciprocal() const {
    if (infinite) return 0;
    if (value == 0) throw std::domain_error("reciprocal of zero index");
    return Rational(1) / value;
  }
  [[nodiscard]] std::string str() const { return infinite ? "inf" : to_string(value); }
};

inline ExtendedRational parse_extended(std::string_view text) {
  if (text == "inf" || text == "infinity" || text == "Inf" || text == "INF") return ExtendedRational::inf();
  return ExtendedRational::of(parse_rational(text));
}

}  // namespace blockshrink
