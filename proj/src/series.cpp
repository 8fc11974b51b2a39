// SPDX-License-Identifier: MIT
#include "translog/series.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace translog {

namespace {

struct KeyLess {
    bool operator()(const ExponentKey& a, const ExponentKey& b) const { return a < b; }
};

void require_same_depth(int a, int b, const char* operation)
{
    if (a != b) {
        throw DepthMismatch{std::string{operation} + ": depths " + std::to_string(a) +
                            " and " + std::to_string(b) + " differ"};
    }
}

long ceil_abs_long(const Rational& value)
{
    mpz_class num = abs(value.get_num());
    mpz_class den = value.get_den();
    mpz_class q = (num + den - 1) / den;
    if (!q.fits_slong_p()) {
        throw InvariantViolation{"region bound too large for an iteration budget"};
    }
    return q.get_si();
}

/// Smallest ell_i exponent in the stored support; 0 for the zero series.
int min_ell_exponent(const Transseries& f, std::size_t i)
{
    int m = 0;
    bool first = true;
    for (const Term& t : f.terms()) {
        const int e = t.key.ell[i];
        if (first || e < m) {
            m = e;
            first = false;
        }
    }
    return first ? 0 : m;
}

} // namespace

// --- ValidityRegion --------------------------------------------------------

int saturating_add(int bound, int delta)
{
    if (bound == kUnboundedEll) {
        return kUnboundedEll;
    }
    const long sum = static_cast<long>(bound) + static_cast<long>(delta);
    if (sum >= static_cast<long>(kUnboundedEll)) {
        return kUnboundedEll - 1;
    }
    if (sum <= static_cast<long>(std::numeric_limits<int>::min())) {
        return std::numeric_limits<int>::min() + 1;
    }
    return static_cast<int>(sum);
}

ValidityRegion ValidityRegion::entire(int depth)
{
    return ValidityRegion{OrderValue::infinity(),
                          std::vector<int>(static_cast<std::size_t>(depth), kUnboundedEll)};
}

ValidityRegion ValidityRegion::box(const Rational& cap_z, const std::vector<int>& cap_ell)
{
    return ValidityRegion{OrderValue::finite(ExponentKey{cap_z, cap_ell}), cap_ell};
}

bool ValidityRegion::is_entire() const
{
    if (!G.infinite) {
        return false;
    }
    return std::all_of(E.begin(), E.end(), [](int e) { return e == kUnboundedEll; });
}

bool ValidityRegion::bounded() const
{
    if (G.infinite) {
        return false;
    }
    return std::none_of(E.begin(), E.end(), [](int e) { return e == kUnboundedEll; });
}

bool ValidityRegion::contains(const ExponentKey& key) const
{
    if (key.depth() != depth()) {
        throw DepthMismatch{"region depth " + std::to_string(depth()) +
                            " vs key depth " + std::to_string(key.depth())};
    }
    if (!G.infinite && lex_compare(key, G.key) != std::strong_ordering::less) {
        return false;
    }
    for (std::size_t i = 0; i < E.size(); ++i) {
        if (E[i] != kUnboundedEll && key.ell[i] > E[i]) {
            return false;
        }
    }
    return true;
}

bool ValidityRegion::covers(const ValidityRegion& other) const
{
    require_same_depth(depth(), other.depth(), "ValidityRegion::covers");
    if (compare(G, other.G) == std::strong_ordering::less) {
        return false;
    }
    for (std::size_t i = 0; i < E.size(); ++i) {
        if (E[i] == kUnboundedEll) {
            continue;
        }
        if (other.E[i] == kUnboundedEll || E[i] < other.E[i]) {
            return false;
        }
    }
    return true;
}

ValidityRegion ValidityRegion::intersect(const ValidityRegion& other) const
{
    require_same_depth(depth(), other.depth(), "ValidityRegion::intersect");
    ValidityRegion out;
    out.G = (compare(G, other.G) == std::strong_ordering::greater) ? other.G : G;
    out.E.resize(E.size());
    for (std::size_t i = 0; i < E.size(); ++i) {
        out.E[i] = std::min(E[i], other.E[i]);
    }
    return out;
}

ValidityRegion ValidityRegion::shifted(const ExponentKey& delta) const
{
    require_same_depth(depth(), delta.depth(), "ValidityRegion::shifted");
    ValidityRegion out;
    out.G = G + delta;
    out.E.resize(E.size());
    for (std::size_t i = 0; i < E.size(); ++i) {
        out.E[i] = saturating_add(E[i], delta.ell[i]);
    }
    return out;
}

ValidityRegion ValidityRegion::extended(int new_depth) const
{
    if (new_depth < depth()) {
        throw DepthMismatch{"cannot extend region to smaller depth"};
    }
    ValidityRegion out = *this;
    if (!out.G.infinite) {
        out.G.key = extend_key(out.G.key, new_depth);
    }
    out.E.resize(static_cast<std::size_t>(new_depth), kUnboundedEll);
    return out;
}

std::string ValidityRegion::describe() const
{
    std::ostringstream os;
    os << "{G=" << to_string(G) << ", E=[";
    for (std::size_t i = 0; i < E.size(); ++i) {
        if (i) {
            os << ',';
        }
        if (E[i] == kUnboundedEll) {
            os << "inf";
        } else {
            os << E[i];
        }
    }
    os << "]}";
    return os.str();
}

// --- Transseries -----------------------------------------------------------

Transseries::Transseries(int depth, std::vector<Term> terms, ValidityRegion region)
    : depth_(depth), region_(std::move(region))
{
    require_same_depth(depth_, region_.depth(), "Transseries");
    std::map<ExponentKey, Rational, KeyLess> merged;
    for (Term& t : terms) {
        require_same_depth(depth_, t.key.depth(), "Transseries term");
        t.coeff.canonicalize();
        if (sgn(t.coeff) == 0) {
            continue;
        }
        auto [it, inserted] = merged.emplace(std::move(t.key), t.coeff);
        if (!inserted) {
            it->second += t.coeff;
        }
    }
    terms_.reserve(merged.size());
    for (auto& [key, coeff] : merged) {
        coeff.canonicalize();
        if (sgn(coeff) != 0 && region_.contains(key)) {
            terms_.push_back(Term{key, coeff});
        }
    }
}

Transseries Transseries::zero(int depth)
{
    return Transseries{depth, {}, ValidityRegion::entire(depth)};
}

Transseries Transseries::zero(int depth, ValidityRegion region)
{
    return Transseries{depth, {}, std::move(region)};
}

Transseries Transseries::monomial(ExponentKey key, Rational coeff)
{
    const int d = key.depth();
    return Transseries{d, {Term{std::move(key), std::move(coeff)}}, ValidityRegion::entire(d)};
}

Transseries Transseries::constant(int depth, Rational value)
{
    return monomial(ExponentKey{Rational{0}, std::vector<int>(static_cast<std::size_t>(depth), 0)},
                    std::move(value));
}

Transseries Transseries::identity(int depth)
{
    return monomial(identity_key(depth), Rational{1});
}

const Rational& Transseries::stored_coefficient(const ExponentKey& key) const
{
    static const Rational zero_value{0};
    auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                               [](const Term& t, const ExponentKey& k) { return t.key < k; });
    if (it != terms_.end() && it->key == key) {
        return it->coeff;
    }
    return zero_value;
}

Transseries Transseries::truncated(const ValidityRegion& window) const
{
    return Transseries{depth_, terms_, region_.intersect(window)};
}

Transseries Transseries::with_region(ValidityRegion region) const
{
    return Transseries{depth_, terms_, std::move(region)};
}

bool Transseries::same_terms(const Transseries& other) const
{
    if (depth_ != other.depth_ || terms_.size() != other.terms_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!(terms_[i].key == other.terms_[i].key) ||
            terms_[i].coeff != other.terms_[i].coeff) {
            return false;
        }
    }
    return true;
}

// --- Arithmetic ------------------------------------------------------------

Transseries add(const Transseries& f, const Transseries& g)
{
    require_same_depth(f.depth(), g.depth(), "add");
    const ValidityRegion region = f.region().intersect(g.region());
    std::vector<Term> merged;
    merged.reserve(f.size() + g.size());
    auto a = f.terms().begin();
    auto b = g.terms().begin();
    while (a != f.terms().end() && b != g.terms().end()) {
        const auto c = lex_compare(a->key, b->key);
        if (c == std::strong_ordering::less) {
            merged.push_back(*a++);
        } else if (c == std::strong_ordering::greater) {
            merged.push_back(*b++);
        } else {
            Rational sum = a->coeff + b->coeff;
            if (sgn(sum) != 0) {
                merged.push_back(Term{a->key, std::move(sum)});
            }
            ++a;
            ++b;
        }
    }
    merged.insert(merged.end(), a, f.terms().end());
    merged.insert(merged.end(), b, g.terms().end());
    return Transseries{f.depth(), std::move(merged), region};
}

Transseries negate(const Transseries& f)
{
    std::vector<Term> terms = f.terms();
    for (Term& t : terms) {
        t.coeff = -t.coeff;
    }
    return Transseries{f.depth(), std::move(terms), f.region()};
}

Transseries sub(const Transseries& f, const Transseries& g)
{
    return add(f, negate(g));
}

Transseries scale(const Rational& c, const Transseries& f)
{
    if (sgn(c) == 0) {
        return Transseries::zero(f.depth());
    }
    std::vector<Term> terms = f.terms();
    for (Term& t : terms) {
        t.coeff *= c;
    }
    return Transseries{f.depth(), std::move(terms), f.region()};
}

Transseries mul(const Transseries& f, const Transseries& g)
{
    require_same_depth(f.depth(), g.depth(), "mul");
    // Exact zero annihilates everything.
    if ((f.is_zero() && f.region().is_entire()) || (g.is_zero() && g.region().is_entire())) {
        return Transseries::zero(f.depth());
    }
    // Window of the product: each factor's window is shifted by the order of
    // the other factor (G) and by the smallest ell exponents of the other
    // factor's support (E), then the two candidates are combined by min.
    const OrderValue of = ord(f);
    const OrderValue og = ord(g);
    ValidityRegion region;
    region.G = f.region().G + og;
    const OrderValue gg = g.region().G + of;
    if (compare(gg, region.G) == std::strong_ordering::less) {
        region.G = gg;
    }
    // The cross term of the two unknown tails sits at G_f + G_g.  With a
    // nonempty support this candidate is dominated (ord < G), but for a
    // stored-zero factor it is the only finite bound.
    const OrderValue gcross = f.region().G + g.region().G;
    if (compare(gcross, region.G) == std::strong_ordering::less) {
        region.G = gcross;
    }
    region.E.resize(f.region().E.size());
    for (std::size_t i = 0; i < region.E.size(); ++i) {
        const int ef = saturating_add(f.region().E[i], min_ell_exponent(g, i));
        const int eg = saturating_add(g.region().E[i], min_ell_exponent(f, i));
        region.E[i] = std::min(ef, eg);
    }

    std::map<ExponentKey, Rational, KeyLess> acc;
    const bool finite_G = !region.G.infinite;
    for (const Term& a : f.terms()) {
        for (const Term& b : g.terms()) {
            // g is sorted by ascending key, so once the z-exponent of the
            // product strictly exceeds the window bound nothing later fits.
            if (finite_G && a.key.alpha + b.key.alpha > region.G.key.alpha) {
                break;
            }
            ExponentKey key = a.key + b.key;
            if (!region.contains(key)) {
                continue;
            }
            auto it = acc.find(key);
            if (it == acc.end()) {
                acc.emplace(std::move(key), a.coeff * b.coeff);
            } else {
                it->second += a.coeff * b.coeff;
            }
        }
    }
    std::vector<Term> terms;
    terms.reserve(acc.size());
    for (auto& [key, coeff] : acc) {
        coeff.canonicalize();
        if (sgn(coeff) != 0) {
            terms.push_back(Term{key, coeff});
        }
    }
    return Transseries{f.depth(), std::move(terms), region};
}

Transseries inverse_mult(const Transseries& f)
{
    if (f.is_zero()) {
        throw ZeroInput{"inverse_mult: zero series"};
    }
    const int depth = f.depth();
    const Term lead = leading_term(f);
    const Transseries inv_lead = Transseries::monomial(-lead.key, Rational{1} / lead.coeff);
    const Transseries one = Transseries::constant(depth, Rational{1});
    const Transseries u = sub(mul(inv_lead, f), one);
    if (u.is_zero() && u.region().is_entire()) {
        return inv_lead; // exact monomial
    }
    if (!u.is_zero() && f.region().G.infinite) {
        throw RegionTooSmall{
            "inverse_mult: the geometric tail is infinite on an unbounded region; "
            "truncate the input to a bounded window first"};
    }

    // Geometric sum 1/(1+u) = sum_j (-u)^j, truncated term by term.  The
    // region of the partial sums is folded in by add(); the loop stops when
    // the order of the next power escapes the window, or after a run of
    // powers contributing nothing inside it (per-coordinate bounds can
    // silence powers long before the lexicographic bound does).
    const Transseries neg_u = negate(u);
    Transseries sum = one;
    Transseries pow = one;
    const long budget = iteration_budget(f.region());
    const int empty_limit = 2 * depth + 2;
    int empty_streak = 0;
    for (long j = 1;; ++j) {
        if (j > budget) {
            throw MaxIterationsExceeded{"inverse_mult: budget " + std::to_string(budget) +
                                        " exhausted; region " + f.region().describe()};
        }
        pow = mul(pow, neg_u);
        if (ord(pow) > sum.region().G) {
            break;
        }
        sum = add(sum, pow);
        if (pow.truncated(sum.region()).is_zero()) {
            if (++empty_streak >= empty_limit) {
                break;
            }
        } else {
            empty_streak = 0;
        }
    }
    return mul(inv_lead, sum);
}

// --- Queries ---------------------------------------------------------------

OrderValue ord(const Transseries& f)
{
    if (f.is_zero()) {
        return OrderValue::infinity();
    }
    return OrderValue::finite(f.terms().front().key);
}

std::optional<Rational> ord_z(const Transseries& f)
{
    if (f.is_zero()) {
        return std::nullopt;
    }
    return f.terms().front().key.alpha;
}

Term leading_term(const Transseries& f)
{
    if (f.is_zero()) {
        throw ZeroInput{"leading_term: zero series"};
    }
    return f.terms().front();
}

Transseries leading_block_z(const Transseries& f)
{
    if (f.is_zero()) {
        return f;
    }
    const Rational& alpha = f.terms().front().key.alpha;
    std::vector<Term> block;
    for (const Term& t : f.terms()) {
        if (t.key.alpha != alpha) {
            break;
        }
        block.push_back(t);
    }
    return Transseries{f.depth(), std::move(block), f.region()};
}

Rational coefficient(const Transseries& f, const ExponentKey& key)
{
    if (!f.region().contains(key)) {
        throw RegionExceeded{"coefficient at " + to_string(key) +
                             " lies outside the validity region " + f.region().describe()};
    }
    return f.stored_coefficient(key);
}

namespace {

std::strong_ordering prefix_compare(const ExponentKey& key, const PartialKey& bound)
{
    const int c = cmp(key.alpha, bound.alpha);
    if (c != 0) {
        return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    for (std::size_t i = 0; i < bound.ell.size(); ++i) {
        if (key.ell[i] != bound.ell[i]) {
            return key.ell[i] < bound.ell[i] ? std::strong_ordering::less
                                             : std::strong_ordering::greater;
        }
    }
    return std::strong_ordering::equal;
}

} // namespace

Transseries project(const Transseries& f, const PartialKey& bound, ProjectMode mode)
{
    if (static_cast<int>(bound.ell.size()) > f.depth()) {
        throw DepthMismatch{"project: bound has more iterated-log coordinates than the series"};
    }
    std::vector<Term> kept;
    for (const Term& t : f.terms()) {
        const auto c = prefix_compare(t.key, bound);
        const bool keep = (mode == ProjectMode::LT && c == std::strong_ordering::less) ||
                          (mode == ProjectMode::LE && c != std::strong_ordering::greater) ||
                          (mode == ProjectMode::GT && c == std::strong_ordering::greater) ||
                          (mode == ProjectMode::GE && c != std::strong_ordering::less);
        if (keep) {
            kept.push_back(t);
        }
    }
    return Transseries{f.depth(), std::move(kept), f.region()};
}

std::optional<Rational> order_distance_z(const Transseries& f, const Transseries& g)
{
    return ord_z(sub(f, g));
}

// --- Depth embedding -------------------------------------------------------

Transseries embed_depth(const Transseries& f, int new_depth)
{
    if (new_depth == f.depth()) {
        return f;
    }
    std::vector<Term> terms;
    terms.reserve(f.size());
    for (const Term& t : f.terms()) {
        terms.push_back(Term{extend_key(t.key, new_depth), t.coeff});
    }
    return Transseries{new_depth, std::move(terms), f.region().extended(new_depth)};
}

Transseries reduce_depth(const Transseries& f, int new_depth)
{
    if (new_depth == f.depth()) {
        return f;
    }
    if (new_depth > f.depth()) {
        throw DepthMismatch{"reduce_depth: target depth exceeds current depth"};
    }
    std::vector<Term> terms;
    terms.reserve(f.size());
    for (const Term& t : f.terms()) {
        for (std::size_t i = static_cast<std::size_t>(new_depth); i < t.key.ell.size(); ++i) {
            if (t.key.ell[i] != 0) {
                throw InvariantViolation{"reduce_depth: support uses coordinate " +
                                         std::to_string(i + 1)};
            }
        }
        ExponentKey key = t.key;
        key.ell.resize(static_cast<std::size_t>(new_depth));
        terms.push_back(Term{std::move(key), t.coeff});
    }
    ValidityRegion region;
    region.E.assign(f.region().E.begin(), f.region().E.begin() + new_depth);
    for (std::size_t i = static_cast<std::size_t>(new_depth); i < f.region().E.size(); ++i) {
        if (f.region().E[i] < 0) {
            throw InvariantViolation{"reduce_depth: region excludes zero exponent"};
        }
    }
    region.G = f.region().G;
    if (!region.G.infinite) {
        region.G.key.ell.resize(static_cast<std::size_t>(new_depth));
    }
    return Transseries{new_depth, std::move(terms), region};
}

// --- Guards ----------------------------------------------------------------

long iteration_budget(const ValidityRegion& region)
{
    long extent = region.depth() + 1;
    long gz = 1;
    if (!region.G.infinite) {
        gz += ceil_abs_long(region.G.key.alpha);
    }
    extent += gz;
    for (int e : region.E) {
        extent += (e == kUnboundedEll) ? 4 * gz : std::max(e, 0);
    }
    return 10 * extent;
}

void require_bounded_region(const ValidityRegion& region, const char* operation)
{
    if (!region.bounded()) {
        throw RegionTooSmall{std::string{operation} +
                             ": requires a bounded validity region, got " + region.describe()};
    }
}

} // namespace translog
