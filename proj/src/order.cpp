// SPDX-License-Identifier: MIT
#include "translog/order.hpp"

#include "translog/errors.hpp"

#include <sstream>

namespace translog {

namespace {

void require_same_depth(const ExponentKey& a, const ExponentKey& b)
{
    if (a.depth() != b.depth()) {
        throw DepthMismatch{"exponent keys have depths " + std::to_string(a.depth()) +
                            " and " + std::to_string(b.depth())};
    }
}

} // namespace

ExponentKey ExponentKey::operator+(const ExponentKey& other) const
{
    require_same_depth(*this, other);
    ExponentKey out{alpha + other.alpha, ell};
    for (std::size_t i = 0; i < out.ell.size(); ++i) {
        out.ell[i] += other.ell[i];
    }
    return out;
}

ExponentKey ExponentKey::operator-(const ExponentKey& other) const
{
    require_same_depth(*this, other);
    ExponentKey out{alpha - other.alpha, ell};
    for (std::size_t i = 0; i < out.ell.size(); ++i) {
        out.ell[i] -= other.ell[i];
    }
    return out;
}

ExponentKey ExponentKey::operator-() const
{
    ExponentKey out{-alpha, ell};
    for (int& e : out.ell) {
        e = -e;
    }
    return out;
}

std::strong_ordering lex_compare(const ExponentKey& a, const ExponentKey& b)
{
    require_same_depth(a, b);
    const int c = cmp(a.alpha, b.alpha);
    if (c < 0) {
        return std::strong_ordering::less;
    }
    if (c > 0) {
        return std::strong_ordering::greater;
    }
    for (std::size_t i = 0; i < a.ell.size(); ++i) {
        if (a.ell[i] != b.ell[i]) {
            return a.ell[i] < b.ell[i] ? std::strong_ordering::less
                                       : std::strong_ordering::greater;
        }
    }
    return std::strong_ordering::equal;
}

ExponentKey identity_key(int depth)
{
    return ExponentKey{Rational{1}, std::vector<int>(static_cast<std::size_t>(depth), 0)};
}

ExponentKey extend_key(const ExponentKey& key, int new_depth)
{
    if (new_depth < key.depth()) {
        throw DepthMismatch{"cannot extend key of depth " + std::to_string(key.depth()) +
                            " to smaller depth " + std::to_string(new_depth)};
    }
    ExponentKey out = key;
    out.ell.resize(static_cast<std::size_t>(new_depth), 0);
    return out;
}

std::string to_string(const ExponentKey& key)
{
    std::ostringstream os;
    os << '(' << to_string(key.alpha) << ';';
    for (std::size_t i = 0; i < key.ell.size(); ++i) {
        os << (i == 0 ? " " : ",") << key.ell[i];
    }
    os << ')';
    return os.str();
}

std::strong_ordering compare(const OrderValue& a, const OrderValue& b)
{
    if (a.infinite && b.infinite) {
        return std::strong_ordering::equal;
    }
    if (a.infinite) {
        return std::strong_ordering::greater;
    }
    if (b.infinite) {
        return std::strong_ordering::less;
    }
    return lex_compare(a.key, b.key);
}

OrderValue operator+(const OrderValue& a, const OrderValue& b)
{
    if (a.infinite || b.infinite) {
        return OrderValue::infinity();
    }
    return OrderValue::finite(a.key + b.key);
}

OrderValue operator+(const OrderValue& a, const ExponentKey& b)
{
    if (a.infinite) {
        return OrderValue::infinity();
    }
    return OrderValue::finite(a.key + b);
}

std::string to_string(const OrderValue& value)
{
    return value.infinite ? std::string{"Infinity"} : to_string(value.key);
}

} // namespace translog
