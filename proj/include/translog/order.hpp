// SPDX-License-Identifier: MIT
#pragma once

#include "translog/rational.hpp"

#include <compare>
#include <string>
#include <vector>

namespace translog {

/// Exponent of one monomial z^alpha l1^{n1} ... lk^{nk} at fixed depth k.
/// Keys are ordered lexicographically by (alpha, n1, ..., nk); smaller keys
/// are asymptotically larger monomials as z -> 0+.
struct ExponentKey {
    Rational alpha;
    std::vector<int> ell;

    ExponentKey() = default;
    ExponentKey(Rational a, std::vector<int> n) : alpha(std::move(a)), ell(std::move(n)) {}

    int depth() const { return static_cast<int>(ell.size()); }

    ExponentKey operator+(const ExponentKey& other) const;
    ExponentKey operator-(const ExponentKey& other) const;
    ExponentKey operator-() const;

    bool operator==(const ExponentKey& other) const
    {
        return alpha == other.alpha && ell == other.ell;
    }
};

/// Three-way lexicographic comparison; requires equal depths.
std::strong_ordering lex_compare(const ExponentKey& a, const ExponentKey& b);

inline bool operator<(const ExponentKey& a, const ExponentKey& b)
{
    return lex_compare(a, b) == std::strong_ordering::less;
}
inline bool operator<=(const ExponentKey& a, const ExponentKey& b)
{
    return lex_compare(a, b) != std::strong_ordering::greater;
}
inline bool operator>(const ExponentKey& a, const ExponentKey& b)
{
    return lex_compare(a, b) == std::strong_ordering::greater;
}
inline bool operator>=(const ExponentKey& a, const ExponentKey& b)
{
    return lex_compare(a, b) != std::strong_ordering::less;
}

/// The key of z at a given depth: (1, 0, ..., 0).
ExponentKey identity_key(int depth);

/// Append zero exponents to reach a larger depth.
ExponentKey extend_key(const ExponentKey& key, int new_depth);

/// Human-readable "(alpha; n1,...,nk)" used in diagnostics.
std::string to_string(const ExponentKey& key);

/// An order: either a finite exponent key or +infinity (order of the zero
/// series, and the upper bound of an unrestricted validity region).
struct OrderValue {
    bool infinite = true;
    ExponentKey key; // meaningful only when !infinite

    static OrderValue infinity() { return OrderValue{}; }
    static OrderValue finite(ExponentKey k)
    {
        OrderValue v;
        v.infinite = false;
        v.key = std::move(k);
        return v;
    }

    bool operator==(const OrderValue& other) const
    {
        if (infinite || other.infinite) {
            return infinite == other.infinite;
        }
        return key == other.key;
    }
};

/// Lexicographic comparison with infinity as the top element.
std::strong_ordering compare(const OrderValue& a, const OrderValue& b);

inline bool operator<(const OrderValue& a, const OrderValue& b)
{
    return compare(a, b) == std::strong_ordering::less;
}
inline bool operator<=(const OrderValue& a, const OrderValue& b)
{
    return compare(a, b) != std::strong_ordering::greater;
}
inline bool operator>(const OrderValue& a, const OrderValue& b)
{
    return compare(a, b) == std::strong_ordering::greater;
}
inline bool operator>=(const OrderValue& a, const OrderValue& b)
{
    return compare(a, b) != std::strong_ordering::less;
}

inline bool operator<(const OrderValue& a, const ExponentKey& b)
{
    return !a.infinite && a.key < b;
}
inline bool operator>(const OrderValue& a, const ExponentKey& b)
{
    return a.infinite || a.key > b;
}

/// Componentwise sum; infinity absorbs.
OrderValue operator+(const OrderValue& a, const OrderValue& b);
OrderValue operator+(const OrderValue& a, const ExponentKey& b);

std::string to_string(const OrderValue& value);

} // namespace translog
