// SPDX-License-Identifier: MIT
#include "translog/series.hpp"

#include <sstream>

namespace translog {

namespace {

/// "^e" with plain digits for integer e >= 2 and a parenthesized signed
/// rational otherwise; nothing for e = 1.
void render_exponent(std::ostringstream& os, const Rational& e)
{
    if (e == 1) {
        return;
    }
    os << '^';
    if (is_integer(e) && sgn(e) > 0) {
        os << to_string(e);
    } else {
        os << '(' << to_string(e) << ')';
    }
}

void render_term(std::ostringstream& os, const ExponentKey& key, const Rational& abs_coeff)
{
    std::ostringstream factors;
    bool any = false;
    if (sgn(key.alpha) != 0) {
        factors << 'z';
        render_exponent(factors, key.alpha);
        any = true;
    }
    for (std::size_t i = 0; i < key.ell.size(); ++i) {
        if (key.ell[i] == 0) {
            continue;
        }
        if (any) {
            factors << '*';
        }
        factors << 'l' << (i + 1);
        render_exponent(factors, Rational{key.ell[i]});
        any = true;
    }
    if (!any) {
        os << to_string(abs_coeff);
        return;
    }
    if (abs_coeff != 1) {
        os << to_string(abs_coeff) << '*';
    }
    os << factors.str();
}

} // namespace

std::string render(const Transseries& f)
{
    if (f.is_zero()) {
        return "0";
    }
    std::ostringstream os;
    bool first = true;
    for (const Term& t : f.terms()) {
        const bool negative = sgn(t.coeff) < 0;
        if (first) {
            if (negative) {
                os << '-';
            }
            first = false;
        } else {
            os << (negative ? " - " : " + ");
        }
        render_term(os, t.key, abs(t.coeff));
    }
    return os.str();
}

} // namespace translog
