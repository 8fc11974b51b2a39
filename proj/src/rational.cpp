// SPDX-License-Identifier: MIT
#include "translog/rational.hpp"

#include "translog/errors.hpp"

#include <cctype>

namespace translog {

Rational parse_rational(const std::string& text)
{
    // Accepted shapes: [+-]digits or [+-]digits/digits.  mpq_class accepts a
    // wider syntax, so validate by hand first to keep diagnostics crisp.
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto fail = [&](const char* why) -> Rational {
        throw ParseError{"invalid rational '" + text + "': " + why};
    };
    if (i < n && (text[i] == '+' || text[i] == '-')) {
        ++i;
    }
    const std::size_t num_begin = i;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
        ++i;
    }
    if (i == num_begin) {
        return fail("missing numerator digits");
    }
    if (i < n) {
        if (text[i] != '/') {
            return fail("unexpected character");
        }
        ++i;
        const std::size_t den_begin = i;
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i == den_begin) {
            return fail("missing denominator digits");
        }
        if (i != n) {
            return fail("unexpected trailing characters");
        }
    }
    Rational value;
    if (value.set_str(text, 10) != 0) {
        return fail("not a base-10 rational");
    }
    if (sgn(value.get_den()) == 0) {
        return fail("zero denominator");
    }
    value.canonicalize();
    return value;
}

std::string to_string(const Rational& value)
{
    Rational canon{value};
    canon.canonicalize();
    return canon.get_str(10);
}

bool is_integer(const Rational& value)
{
    Rational canon{value};
    canon.canonicalize();
    return canon.get_den() == 1;
}

long to_long(const Rational& value)
{
    Rational canon{value};
    canon.canonicalize();
    if (canon.get_den() != 1 || !canon.get_num().fits_slong_p()) {
        throw InvariantViolation{"rational " + to_string(value) +
                                 " is not representable as long"};
    }
    return canon.get_num().get_si();
}

Rational binomial(const Rational& alpha, unsigned long i)
{
    Rational result{1};
    for (unsigned long j = 0; j < i; ++j) {
        result *= (alpha - Rational(static_cast<long>(j)));
        result /= Rational(static_cast<long>(j) + 1);
    }
    result.canonicalize();
    return result;
}

Rational factorial(unsigned long i)
{
    Rational result{1};
    for (unsigned long j = 2; j <= i; ++j) {
        result *= Rational(static_cast<long>(j));
    }
    return result;
}

} // namespace translog
