// SPDX-License-Identifier: MIT
#pragma once

#include <gmpxx.h>

#include <string>

namespace translog {

/// Exact rational scalar used for both coefficients and power exponents.
/// The kernel never touches floating point.
using Rational = mpq_class;

/// Parse "p", "-p" or "p/q" into a canonical rational.
/// Throws ParseError on malformed input or zero denominator.
Rational parse_rational(const std::string& text);

/// Render canonically as "p" or "p/q" with q > 1 and gcd(p, q) = 1.
std::string to_string(const Rational& value);

/// True when the value has denominator 1.
bool is_integer(const Rational& value);

/// Exact conversion of an integer rational to long.
/// Throws InvariantViolation when the value is fractional or out of range.
long to_long(const Rational& value);

/// Generalized binomial coefficient C(alpha, i) for rational alpha, i >= 0.
Rational binomial(const Rational& alpha, unsigned long i);

/// Exact factorial as a rational.
Rational factorial(unsigned long i);

} // namespace translog
