// SPDX-License-Identifier: MIT
#include "translog/calculus.hpp"

#include "sum_guard.hpp"

#include <algorithm>
#include <map>

namespace translog {

namespace {

using detail::TailGuard;
using detail::escapes;

struct KeyLess {
    bool operator()(const ExponentKey& a, const ExponentKey& b) const { return a < b; }
};

std::vector<int> zeros(int depth)
{
    return std::vector<int>(static_cast<std::size_t>(depth), 0);
}

} // namespace

bool is_parabolic(const Transseries& f)
{
    if (f.is_zero()) {
        return false;
    }
    const Term lead = f.terms().front();
    return lead.key == identity_key(f.depth()) && lead.coeff == 1;
}

Transseries differentiate(const Transseries& f)
{
    const int k = f.depth();
    const ValidityRegion region = f.region().shifted(ExponentKey{Rational{-1}, zeros(k)});
    std::map<ExponentKey, Rational, KeyLess> acc;
    auto push = [&acc](ExponentKey key, Rational c) {
        auto it = acc.find(key);
        if (it == acc.end()) {
            acc.emplace(std::move(key), std::move(c));
        } else {
            it->second += c;
        }
    };
    for (const Term& t : f.terms()) {
        ExponentKey base = t.key;
        base.alpha -= 1;
        if (sgn(t.key.alpha) != 0) {
            push(base, t.coeff * t.key.alpha);
        }
        // chain rule: l_j contributes n_j * l_1...l_{j-1} l_j^{n_j+1} / z
        for (std::size_t j = 0; j < base.ell.size(); ++j) {
            if (t.key.ell[j] == 0) {
                continue;
            }
            ExponentKey key = base;
            for (std::size_t i = 0; i <= j; ++i) {
                key.ell[i] += 1;
            }
            push(std::move(key), t.coeff * t.key.ell[j]);
        }
    }
    std::vector<Term> terms;
    terms.reserve(acc.size());
    for (auto& [key, coeff] : acc) {
        terms.push_back(Term{key, coeff});
    }
    return Transseries{k, std::move(terms), region};
}

Transseries block_derive_series(const Transseries& f, int level)
{
    const int k = f.depth();
    if (level < 1 || level > k) {
        throw DepthMismatch{"block_derive_series: level " + std::to_string(level) +
                            " outside 1.." + std::to_string(k)};
    }
    std::map<ExponentKey, Rational, KeyLess> acc;
    for (const Term& t : f.terms()) {
        for (std::size_t j = static_cast<std::size_t>(level) - 1; j < t.key.ell.size(); ++j) {
            if (t.key.ell[j] == 0) {
                continue;
            }
            ExponentKey key = t.key;
            for (std::size_t i = static_cast<std::size_t>(level) - 1; i <= j; ++i) {
                key.ell[i] += 1;
            }
            auto it = acc.find(key);
            if (it == acc.end()) {
                acc.emplace(std::move(key), t.coeff * t.key.ell[j]);
            } else {
                it->second += t.coeff * t.key.ell[j];
            }
        }
    }
    std::vector<Term> terms;
    terms.reserve(acc.size());
    for (auto& [key, coeff] : acc) {
        terms.push_back(Term{key, coeff});
    }
    return Transseries{k, std::move(terms), f.region()};
}

Transseries integrate_monomial(const ExponentKey& key, const ValidityRegion& target_region)
{
    const int k = key.depth();
    if (target_region.depth() != k) {
        throw DepthMismatch{"integrate_monomial: region depth mismatch"};
    }
    const bool all_ones =
        std::all_of(key.ell.begin(), key.ell.end(), [](int e) { return e == 1; });
    if (key.alpha == -1 && all_ones) {
        // The tower antiderivative: integral of l1...lk/z is -1/l_{k+1}.
        ExponentKey promoted{Rational{0}, zeros(k + 1)};
        promoted.ell[static_cast<std::size_t>(k)] = -1;
        return Transseries{k + 1, {Term{promoted, Rational{-1}}}, target_region.extended(k + 1)};
    }
    if (key.alpha != -1) {
        // Integration by parts: the antiderivative candidate z^{a+1} l^n/(a+1)
        // differentiates to the monomial plus corrections with higher log
        // exponents; feed those back until they leave the window.
        const ValidityRegion cascade =
            target_region.shifted(ExponentKey{Rational{-1}, zeros(k)});
        std::vector<Term> acc;
        Transseries cur{k, {Term{key, Rational{1}}}, cascade};
        TailGuard guard(target_region, "integrate_monomial");
        while (!cur.is_zero()) {
            guard.tick();
            std::vector<Term> next;
            for (const Term& t : cur.terms()) {
                const Rational a1 = t.key.alpha + 1;
                const Rational c = t.coeff / a1;
                acc.push_back(Term{ExponentKey{a1, t.key.ell}, c});
                for (std::size_t j = 0; j < t.key.ell.size(); ++j) {
                    if (t.key.ell[j] == 0) {
                        continue;
                    }
                    ExponentKey kk = t.key;
                    for (std::size_t i = 0; i <= j; ++i) {
                        kk.ell[i] += 1;
                    }
                    next.push_back(Term{std::move(kk), -c * t.key.ell[j]});
                }
            }
            cur = Transseries{k, std::move(next), cascade};
        }
        return Transseries{k, std::move(acc), target_region};
    }
    // alpha = -1 with a non-tower log part (k >= 1 here): substitute w = l1,
    // turning z^{-1} l1^{n1} l2^{n2} ... dz into w^{n1-2} l1(w)^{n2} ... dw,
    // and integrate in the depth-(k-1) world whose tower starts at l2.
    ExponentKey wkey{Rational{key.ell[0] - 2},
                     std::vector<int>(key.ell.begin() + 1, key.ell.end())};
    ValidityRegion wtarget;
    wtarget.E.assign(target_region.E.begin() + 1, target_region.E.end());
    if (target_region.E[0] == kUnboundedEll) {
        wtarget.G = OrderValue::infinity();
    } else {
        wtarget.G = OrderValue::finite(
            ExponentKey{Rational{target_region.E[0] + 1}, zeros(k - 1)});
    }
    const Transseries inner = integrate_monomial(wkey, wtarget);
    const int dsub = inner.depth();
    std::vector<Term> mapped;
    mapped.reserve(inner.size());
    for (const Term& t : inner.terms()) {
        std::vector<int> ell;
        ell.reserve(static_cast<std::size_t>(dsub) + 1);
        ell.push_back(static_cast<int>(to_long(t.key.alpha)));
        ell.insert(ell.end(), t.key.ell.begin(), t.key.ell.end());
        mapped.push_back(Term{ExponentKey{Rational{0}, std::move(ell)}, t.coeff});
    }
    return Transseries{dsub + 1, std::move(mapped), target_region.extended(dsub + 1)};
}

Transseries integrate(const Transseries& f)
{
    const int k = f.depth();
    const ValidityRegion target = f.region().shifted(ExponentKey{Rational{1}, zeros(k)});
    if (f.is_zero()) {
        return Transseries::zero(k, target);
    }
    const ExponentKey promoting{Rational{-1}, std::vector<int>(static_cast<std::size_t>(k), 1)};
    int out_depth = k;
    for (const Term& t : f.terms()) {
        if (t.key == promoting) {
            out_depth = k + 1;
            break;
        }
    }
    Transseries total = Transseries::zero(out_depth, target.extended(out_depth));
    for (const Term& t : f.terms()) {
        const Transseries piece = scale(t.coeff, integrate_monomial(t.key, target));
        total = add(total, embed_depth(piece, out_depth));
    }
    if (!f.region().contains(promoting)) {
        // The input window cannot answer for the tower key, so the depth-
        // promoted coefficient of the antiderivative is undetermined; clamp
        // the window below the constant level where it would surface.
        ValidityRegion clamp = total.region();
        const OrderValue cut = OrderValue::finite(ExponentKey{Rational{0}, zeros(out_depth)});
        if (compare(cut, clamp.G) == std::strong_ordering::less) {
            clamp.G = cut;
            total = total.truncated(clamp);
        }
    }
    return total;
}

int PowerSeriesSpec::first_degree() const
{
    switch (kind) {
    case Kind::Log1p:
    case Kind::Binomial:
    case Kind::Exp:
        return 1;
    case Kind::OnePlusXLog1pMinusX:
        return 2;
    case Kind::Custom:
        return custom_start;
    }
    return 1;
}

Rational PowerSeriesSpec::scalar_coefficient(unsigned long i) const
{
    switch (kind) {
    case Kind::Log1p:
        // log(1+x) = sum (-1)^{i+1} x^i / i
        return Rational{(i % 2 == 0) ? -1 : 1} / Rational{static_cast<long>(i)};
    case Kind::OnePlusXLog1pMinusX:
        // (1+x)log(1+x) - x = sum_{i>=2} (-1)^i x^i / ((i-1) i)
        return Rational{(i % 2 == 0) ? 1 : -1} /
               Rational{static_cast<long>(i - 1) * static_cast<long>(i)};
    case Kind::Binomial:
        return translog::binomial(beta, i);
    case Kind::Exp:
        return Rational{1} / factorial(i);
    case Kind::Custom:
        break;
    }
    throw InvariantViolation{"scalar_coefficient: custom streams carry series"};
}

Transseries apply_series(const PowerSeriesSpec& h, const Transseries& Q)
{
    const int k = Q.depth();
    const ExponentKey zero_key{Rational{0}, zeros(k)};
    if (!Q.is_zero() && !(ord(Q).key > zero_key)) {
        throw Error{"apply_series: ord(Q) must be lexicographically positive"};
    }
    const int start = h.first_degree();
    auto power_of_Q = [&](int n) {
        Transseries p = Transseries::constant(k, Rational{1});
        for (int i = 0; i < n; ++i) {
            p = mul(p, Q);
        }
        return p;
    };
    if (h.kind == PowerSeriesSpec::Kind::Custom) {
        Transseries S = Transseries::zero(k);
        Transseries pow = power_of_Q(start);
        for (const Transseries& c : h.custom_coeffs) {
            S = add(S, mul(c, pow));
            pow = mul(pow, Q);
        }
        return S;
    }
    const bool natural_end = h.kind == PowerSeriesSpec::Kind::Binomial &&
                             is_integer(h.beta) && sgn(h.beta) >= 0;
    if (!natural_end && !Q.is_zero() && Q.region().G.infinite) {
        throw RegionTooSmall{
            "apply_series: infinite coefficient stream on an unbounded window; "
            "truncate the argument first"};
    }
    Transseries S = Transseries::zero(k);
    Transseries pow = power_of_Q(start);
    TailGuard guard(Q.region(), "apply_series");
    OrderValue lower = ord(Q);
    for (int i = 1; i < start; ++i) {
        lower = lower + ord(Q);
    }
    for (unsigned long i = static_cast<unsigned long>(start);; ++i) {
        if (natural_end && Rational(static_cast<long>(i)) > h.beta) {
            break;
        }
        guard.tick();
        if (escapes(lower, S.region()) ||
            detail::tail_above_window(lower, ord(Q).key, S.region())) {
            break;
        }
        const Transseries term = scale(h.scalar_coefficient(i), pow);
        S = add(S, term);
        if (guard.silent(term, S.region())) {
            break;
        }
        pow = mul(pow, Q);
        lower = lower + ord(Q);
    }
    return S;
}

Transseries compose_parabolic(const Transseries& f, const ParabolicGerm& g)
{
    if (f.depth() != g.depth()) {
        throw DepthMismatch{"compose_parabolic: depths differ"};
    }
    const int k = f.depth();
    if (!is_parabolic(g)) {
        throw NotParabolic{"compose_parabolic: right factor must be z + higher terms"};
    }
    const Transseries g1 = sub(g, Transseries::identity(k));
    if (g1.is_zero() && g1.region().is_entire()) {
        return f;
    }
    Transseries S = f;
    Transseries deriv = f;
    Transseries gpow = Transseries::constant(k, Rational{1});
    Rational fact{1};
    // ord(f^(i) g1^i / i!) >= ord f + i (ord g1 - ord z); a stored-zero g1
    // contributes nothing finite, so its bound is infinite.
    OrderValue lower = g1.is_zero() ? OrderValue::infinity() : ord(f);
    const ExponentKey step =
        g1.is_zero() ? identity_key(k) : (ord(g1).key - identity_key(k));
    TailGuard guard(f.region().intersect(g.region()), "compose_parabolic");
    for (long i = 1;; ++i) {
        guard.tick();
        deriv = differentiate(deriv);
        if (deriv.is_zero() && deriv.region().is_entire()) {
            break; // polynomial Taylor sum ended exactly
        }
        gpow = mul(gpow, g1);
        fact *= i;
        if (!lower.infinite) {
            lower = lower + step;
        }
        if (escapes(lower, S.region()) ||
            detail::tail_above_window(lower, step, S.region())) {
            break;
        }
        const Transseries term = scale(Rational{1} / fact, mul(deriv, gpow));
        S = add(S, term);
        if (guard.silent(term, S.region())) {
            break;
        }
    }
    return S;
}

ParabolicGerm invert_parabolic(const ParabolicGerm& phi)
{
    const int k = phi.depth();
    if (!is_parabolic(phi)) {
        throw NotParabolic{"invert_parabolic: input must be z + higher terms"};
    }
    const Transseries phi1 = sub(phi, Transseries::identity(k));
    if (phi1.is_zero()) {
        return Transseries::identity(k).truncated(phi.region());
    }
    if (phi.region().G.infinite) {
        throw RegionTooSmall{
            "invert_parabolic: the inverse has infinitely many terms on an "
            "unbounded window; truncate the input first"};
    }
    Transseries psi = Transseries::identity(k);
    TailGuard guard(phi.region(), "invert_parabolic");
    // With negative log exponents in phi the certified window of the iterates
    // keeps shrinking by a fixed amount per round even after the terms have
    // stabilized, so an exact fixed point of (terms, window) may never appear;
    // a streak of rounds without new terms ends the iteration instead.
    int silent = 0;
    const int silent_limit = 2 * k + 2;
    for (;;) {
        guard.tick();
        const Transseries next = sub(Transseries::identity(k), compose_parabolic(phi1, psi));
        if (next.same_terms(psi)) {
            if (next.region() == psi.region() || ++silent >= silent_limit) {
                return next;
            }
        } else {
            silent = 0;
        }
        psi = next;
    }
}

ParabolicGerm flow_time_one(const VectorField& X)
{
    const Transseries& F = X.F;
    const int k = F.depth();
    if (F.is_zero() && F.region().is_entire()) {
        return Transseries::identity(k);
    }
    if (!F.is_zero() && !(ord(F).key > identity_key(k))) {
        throw NotParabolic{"flow_time_one: ord of the field must exceed (1; 0,...)"};
    }
    if (!F.is_zero() && F.region().G.infinite) {
        throw RegionTooSmall{
            "flow_time_one: the flow has infinitely many terms on an unbounded "
            "window; truncate the field first"};
    }
    Transseries S = Transseries::identity(k);
    Transseries h = Transseries::identity(k);
    Rational fact{1};
    OrderValue lower =
        F.is_zero() ? OrderValue::infinity() : OrderValue::finite(identity_key(k));
    const ExponentKey step =
        F.is_zero() ? identity_key(k) : (ord(F).key - identity_key(k));
    TailGuard guard(F.region(), "flow_time_one");
    for (long n = 1;; ++n) {
        guard.tick();
        h = mul(F, differentiate(h));
        fact *= n;
        if (!lower.infinite) {
            lower = lower + step;
        }
        if (escapes(lower, S.region()) ||
            detail::tail_above_window(lower, step, S.region())) {
            break;
        }
        const Transseries term = scale(Rational{1} / fact, h);
        S = add(S, term);
        if (guard.silent(term, S.region())) {
            break;
        }
    }
    return S;
}

} // namespace translog
