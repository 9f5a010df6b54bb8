#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

#include "ultradiff/errors.hpp"

namespace ultradiff {

// Ball diameters and measures are kept exact; doubles are views computed on
// demand. Arbitrary precision because random trees produce denominators that
// overflow any fixed-width type after a few dozen levels.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(const BigInt& n) { return n.convert_to<double>(); }

/// Parses "p/q", "p", or a plain decimal like "0.25" into an exact rational.
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw ValidationError("empty rational literal");
  const auto slash = text.find('/');
  const auto dot = text.find('.');
  try {
    if (slash != std::string::npos) {
      const BigInt num(text.substr(0, slash));
      const BigInt den(text.substr(slash + 1));
      if (den == 0) throw ValidationError("rational literal with zero denominator: " + text);
      return Rational(num, den);
    }
    if (dot != std::string::npos) {
      const std::string frac = text.substr(dot + 1);
      if (frac.empty()) throw ValidationError("malformed rational literal: " + text);
      BigInt den = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
      const BigInt whole(text.substr(0, dot).empty() ? "0" : text.substr(0, dot));
      const bool neg = !text.empty() && text[0] == '-';
      const BigInt num = whole * den + (neg ? -BigInt(frac) : BigInt(frac));
      return Rational(num, den);
    }
    return Rational(BigInt(text));
  } catch (const std::runtime_error&) {
    throw ValidationError("malformed rational literal: " + text);
  }
}

inline std::string format_rational(const Rational& r) {
  const BigInt num = numerator(r), den = denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

}  // namespace ultradiff
