// SPDX-License-Identifier: MIT
#pragma once

#include "translog/errors.hpp"
#include "translog/order.hpp"
#include "translog/rational.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace translog {

/// Sentinel for an unrestricted per-coordinate bound in ValidityRegion::E.
inline constexpr int kUnboundedEll = std::numeric_limits<int>::max();

/// Down-closed window of exponent keys on which a truncation is trusted.
///
/// A key belongs to the region iff it is lexicographically smaller than G and
/// every iterated-log exponent ell_i is at most E[i].  The zero series and
/// exact finite expressions carry the entire region (G = Infinity, all E
/// unbounded).  Arithmetic propagates regions so that every stored
/// coefficient is determined by the stored windows of the inputs.
struct ValidityRegion {
    OrderValue G = OrderValue::infinity();
    std::vector<int> E;

    ValidityRegion() = default;
    ValidityRegion(OrderValue g, std::vector<int> e) : G(std::move(g)), E(std::move(e)) {}

    int depth() const { return static_cast<int>(E.size()); }

    /// Region containing every key at the given depth.
    static ValidityRegion entire(int depth);

    /// Box region: G = (cap_z; cap_ell), E = cap_ell.
    static ValidityRegion box(const Rational& cap_z, const std::vector<int>& cap_ell);

    bool is_entire() const;
    bool bounded() const; ///< G finite and every E[i] restricted.

    bool contains(const ExponentKey& key) const;

    /// True when this region is a superset of the other.
    bool covers(const ValidityRegion& other) const;

    ValidityRegion intersect(const ValidityRegion& other) const;

    /// Minkowski shift: G + delta and E[i] + delta.ell[i] (saturating).
    ValidityRegion shifted(const ExponentKey& delta) const;

    /// Same window viewed at a greater depth (new coordinates unrestricted).
    ValidityRegion extended(int new_depth) const;

    bool operator==(const ValidityRegion& other) const
    {
        return G == other.G && E == other.E;
    }

    std::string describe() const;
};

/// Saturating bound arithmetic for E entries.
int saturating_add(int bound, int delta);

/// One monomial: coeff * z^{key.alpha} * l1^{key.ell[0]} * ...
struct Term {
    ExponentKey key;
    Rational coeff;
};

/// Truncated logarithmic transseries of fixed depth.
///
/// Terms are stored sorted by ascending exponent key with nonzero
/// coefficients, all inside the attached validity region.  Instances are
/// immutable; every operation returns a fresh value.
class Transseries {
public:
    /// Depth-0 zero with entire region.
    Transseries() : region_(ValidityRegion::entire(0)) {}

    /// Validating constructor; merges duplicate keys, drops zeros and terms
    /// outside the region, sorts by key.
    Transseries(int depth, std::vector<Term> terms, ValidityRegion region);

    static Transseries zero(int depth);
    static Transseries zero(int depth, ValidityRegion region);
    static Transseries monomial(ExponentKey key, Rational coeff);
    static Transseries constant(int depth, Rational value);
    static Transseries identity(int depth); ///< the series z

    int depth() const { return depth_; }
    const std::vector<Term>& terms() const { return terms_; }
    const ValidityRegion& region() const { return region_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    /// Stored coefficient at a key (0 when absent); no region check.
    const Rational& stored_coefficient(const ExponentKey& key) const;

    /// Restrict to the intersection with the given region.
    Transseries truncated(const ValidityRegion& window) const;

    /// Same terms with a replaced region (terms outside are dropped).
    Transseries with_region(ValidityRegion region) const;

    bool same_terms(const Transseries& other) const;

private:
    int depth_ = 0;
    std::vector<Term> terms_;
    ValidityRegion region_;
};

// --- Basic arithmetic ------------------------------------------------------

Transseries add(const Transseries& f, const Transseries& g);
Transseries sub(const Transseries& f, const Transseries& g);
Transseries negate(const Transseries& f);
Transseries scale(const Rational& c, const Transseries& f);
Transseries mul(const Transseries& f, const Transseries& g);

/// Multiplicative inverse 1/f for f with a nonzero leading term.
/// Throws ZeroInput on the zero series.  When the geometric tail is
/// nontrivial the region of f must be bounded (RegionTooSmall otherwise).
Transseries inverse_mult(const Transseries& f);

// --- Order and support queries --------------------------------------------

/// Order of the stored support; Infinity for the (stored) zero series.
OrderValue ord(const Transseries& f);

/// Smallest z-exponent of the support; nullopt for the zero series.
std::optional<Rational> ord_z(const Transseries& f);

/// Smallest term; throws ZeroInput on the zero series.
Term leading_term(const Transseries& f);

/// All terms sharing the minimal z-exponent, as a series.
Transseries leading_block_z(const Transseries& f);

/// Coefficient at a key; throws RegionExceeded when the key lies outside the
/// validity region (the truncation cannot answer there).
Rational coefficient(const Transseries& f, const ExponentKey& key);

/// Bound on the first 1 + |ell| key coordinates, used by project().
struct PartialKey {
    Rational alpha;
    std::vector<int> ell; ///< may be shorter than the ambient depth

    PartialKey() = default;
    PartialKey(Rational a, std::vector<int> n) : alpha(std::move(a)), ell(std::move(n)) {}
};

enum class ProjectMode { LT, LE, GT, GE };

/// Keep the terms whose key prefix compares as requested against the bound.
/// The validity region is unchanged.
Transseries project(const Transseries& f, const PartialKey& bound, ProjectMode mode);

/// z-order of f - g; nullopt encodes Infinity (equal within the window).
std::optional<Rational> order_distance_z(const Transseries& f, const Transseries& g);

// --- Depth embedding -------------------------------------------------------

/// View f at a greater depth; new iterated-log exponents are zero.
Transseries embed_depth(const Transseries& f, int new_depth);

/// Inverse of embed_depth: drop trailing coordinates, all of which must be
/// zero in the support (InvariantViolation otherwise).
Transseries reduce_depth(const Transseries& f, int new_depth);

// --- Iteration guards ------------------------------------------------------

/// Default budget for truncated infinite sums: 10 x (region extent).
long iteration_budget(const ValidityRegion& region);

/// Throws RegionTooSmall unless the region is bounded.
void require_bounded_region(const ValidityRegion& region, const char* operation);

/// Render "c1*z^a1*l1^... + ..." in canonical ascending key order;
/// "0" for the zero series.  Matches the CLI expression grammar.
std::string render(const Transseries& f);

} // namespace translog
