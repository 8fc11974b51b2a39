#!/usr/bin/env python3
"""Independent reference engine for logarithmic transseries.

This module is a deliberately *separate* implementation of the arithmetic used
by the C++ library, written to generate frozen expected values for the test
suite.  Where the C++ code composes series with truncated Taylor sums, this
engine composes through the functional equations of the iterated logarithms,
so agreement between the two is meaningful evidence of correctness.

Representation
--------------
A series is a dict mapping keys to nonzero Fractions.  A key is a pair
``(alpha, ells)`` where ``alpha`` is a Fraction (the z-exponent) and ``ells``
is a tuple of ints (the exponents of l1..lk, with l1 = -1/log z and
l_{j+1} = l_j o l1).  Keys are ordered lexicographically.

Truncation
----------
``Caps(zcap, ellcaps)``: a key is kept iff it is lexicographically smaller
than ``(zcap, ellcaps)`` *and* every ell-exponent is <= its cap.  This matches
the library's validity-region semantics, so frozen values can be compared
term-for-term below a stated bound.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import count
import random

Key = tuple  # (Fraction, tuple[int, ...])
Series = dict  # Key -> Fraction


# ---------------------------------------------------------------------------
# Keys and truncation
# ---------------------------------------------------------------------------

def key(alpha, ells) -> Key:
    return (Fraction(alpha), tuple(int(e) for e in ells))


def lex_lt(a: Key, b: Key) -> bool:
    if a[0] != b[0]:
        return a[0] < b[0]
    return a[1] < b[1]  # tuple comparison is lexicographic


class Caps:
    """Truncation bound: lex bound (zcap, ellcaps) plus per-ell upper bounds."""

    def __init__(self, zcap, ellcaps):
        self.zcap = Fraction(zcap)
        self.ellcaps = tuple(int(c) for c in ellcaps)
        self.depth = len(self.ellcaps)

    def keeps(self, k: Key) -> bool:
        if not lex_lt(k, (self.zcap, self.ellcaps)):
            return False
        return all(e <= c for e, c in zip(k[1], self.ellcaps))

    def __repr__(self):
        return f"Caps({self.zcap}, {list(self.ellcaps)})"


def trunc(f: Series, caps: Caps) -> Series:
    return {k: c for k, c in f.items() if c != 0 and caps.keeps(k)}


# ---------------------------------------------------------------------------
# Ring operations
# ---------------------------------------------------------------------------

def add(f: Series, g: Series) -> Series:
    out = dict(f)
    for k, c in g.items():
        s = out.get(k, Fraction(0)) + c
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def neg(f: Series) -> Series:
    return {k: -c for k, c in f.items()}


def sub(f: Series, g: Series) -> Series:
    return add(f, neg(g))


def scal(a, f: Series) -> Series:
    a = Fraction(a)
    if not a:
        return {}
    return {k: a * c for k, c in f.items()}


def mul(f: Series, g: Series, caps: Caps) -> Series:
    out: Series = {}
    zcap, ell = caps.zcap, caps.ellcaps
    gitems = sorted(g.items(), key=lambda kv: kv[0][0])
    for (az, an), ac in f.items():
        zlim = zcap - az
        for (bz, bn), bc in gitems:
            if bz > zlim:
                break  # g sorted by z-exponent: nothing below the cap remains
            cn = tuple(x + y for x, y in zip(an, bn))
            if bz == zlim and not cn < ell:
                continue
            if any(e > c for e, c in zip(cn, ell)):
                continue
            k = (az + bz, cn)
            s = out.get(k, Fraction(0)) + ac * bc
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def monomial(alpha, ells, coeff=1) -> Series:
    c = Fraction(coeff)
    return {key(alpha, ells): c} if c else {}


def identity(depth: int) -> Series:
    return monomial(1, [0] * depth)


def ord_key(f: Series) -> Key | None:
    """Smallest key present, or None for the zero series."""
    if not f:
        return None
    return min(f.keys(), key=lambda k: (k[0], k[1]))


def coeff(f: Series, k: Key) -> Fraction:
    return f.get(k, Fraction(0))


def power_list(u: Series, caps: Caps):
    """Yield u^1, u^2, ... until the truncated power vanishes.

    Requires ord(u) > 0; every key of u^i is a sum of i positive keys, so
    under box caps the powers eventually truncate to zero and the generator
    stops.
    """
    p = trunc(u, caps)
    while p:
        yield p
        p = mul(p, u, caps)


def binom_series(alpha, u: Series, caps: Caps) -> Series:
    """(1+u)^alpha for rational alpha, ord(u) > 0.  Includes the 1 term."""
    alpha = Fraction(alpha)
    depth = caps.depth
    out = monomial(0, [0] * depth)
    c = Fraction(1)
    for i, p in zip(count(1), power_list(u, caps)):
        c = c * (alpha - i + 1) / i
        if c:
            out = add(out, scal(c, p))
    return out


def log1p(u: Series, caps: Caps) -> Series:
    """log(1+u) for ord(u) > 0."""
    out: Series = {}
    for i, p in zip(count(1), power_list(u, caps)):
        out = add(out, scal(Fraction((-1) ** (i + 1), i), p))
    return out


def exp_series(u: Series, caps: Caps) -> Series:
    """exp(u) - includes the 1 term; ord(u) > 0."""
    out = monomial(0, [0] * caps.depth)
    fact = Fraction(1)
    for i, p in zip(count(1), power_list(u, caps)):
        fact /= i
        out = add(out, scal(fact, p))
    return out


def inverse_mult(f: Series, caps: Caps) -> Series:
    """1/f via geometric series around the leading monomial.

    The geometric sum is carried out under caps shifted by ord(f), so that
    multiplying by the (possibly negative-order) leading inverse afterwards
    still fills the whole requested region.
    """
    k0 = ord_key(f)
    if k0 is None:
        raise ZeroDivisionError("inverse of zero series")
    c0 = f[k0]
    inv_lead = monomial(-k0[0], [-e for e in k0[1]], 1 / c0)
    inner = Caps(caps.zcap + k0[0],
                 [c + e for c, e in zip(caps.ellcaps, k0[1])])
    u = sub(mul(inv_lead, f, inner), monomial(0, [0] * caps.depth))
    geo = binom_series(-1, u, inner)
    return mul(inv_lead, geo, caps)


# ---------------------------------------------------------------------------
# Differentiation and integration
# ---------------------------------------------------------------------------

def deriv(f: Series, caps: Caps) -> Series:
    """d/dz.  d/dz(z^a l^n) = z^{a-1}(a l^n + sum_m n_m l1..l_{m-1} l_m^{n_m+1} prod_{j>m} l_j^{n_j})."""
    out: Series = {}
    for (az, an), ac in f.items():
        terms = [((az - 1, an), az * ac)]
        for m in range(len(an)):
            if an[m]:
                nn = list(an)
                for j in range(m):
                    nn[j] += 1
                nn[m] += 1
                terms.append(((az - 1, tuple(nn)), an[m] * ac))
        for k, c in terms:
            if c and caps.keeps(k):
                s = out.get(k, Fraction(0)) + c
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
    return out


def integrate_monomial(k: Key, c: Fraction, caps: Caps) -> Series:
    """Antiderivative of c z^a l^n dz (constant of integration zero in the
    sense that no pure-constant key is ever produced; the special key
    (-1, (1,..,1)) integrates to -1/l_{k+1}, raising depth by one).

    The result is expressed at depth k+1 (the last ell-exponent is 0 for all
    ordinary terms); callers who never hit the promotion key may drop it.
    """
    alpha, ells = k
    depth = len(ells)
    out_caps = Caps(caps.zcap, list(caps.ellcaps) + [max(caps.ellcaps, default=8) if caps.ellcaps else 8])

    def promote(series: Series) -> Series:
        return {(a, n + (0,)): v for (a, n), v in series.items()}

    if alpha != -1:
        # Integrate by parts off the pure power:
        #   int z^a l^n = z^{a+1} l^n/(a+1) - 1/(a+1) int z^{a+1} (l^n)' dz
        lead_key = (alpha + 1, ells + (0,))
        out: Series = {}
        if out_caps.keeps(lead_key):
            out[lead_key] = c / (alpha + 1)
        rest = deriv(monomial(alpha + 1, ells, c), caps)  # z^a * (stuff)
        rest.pop((alpha, ells), None)  # remove (a+1) z^a l^n part
        # rest = z^a * (l^n)' * z  ... actually deriv gives z^a((a+1)l^n + D1(l^n));
        # we removed the (a+1) term, leaving z^a D1(l^n) whose integral recurses
        # with strictly larger ell-order, so this terminates under caps.
        acc: Series = {}
        for kk, cc in rest.items():
            acc = add(acc, integrate_monomial(kk, -cc / (alpha + 1), caps))
        return add(out, acc)

    # alpha == -1 cases
    if all(e == 1 for e in ells):
        # int z^{-1} l1..lk dz = -1/l_{k+1}
        nn = [0] * depth + [-1]
        kk = (Fraction(0), tuple(nn))
        return {kk: -c} if out_caps.keeps(kk) else {}

    if depth == 0:
        raise ValueError("integral of 1/z alone is log z, not representable")

    # Substitute u = l1: dz/z = du/u^2, l_{j+1}(z) = l_j(u).
    # int z^{-1} l1^{n1} l2^{n2} ... dz = int u^{n1-2} l1(u)^{n2} ... du
    inner_caps = Caps(caps.ellcaps[0] + 1, caps.ellcaps[1:])
    inner = integrate_monomial((Fraction(ells[0] - 2), tuple(ells[1:])), c, inner_caps)
    # Map back: u^a l^m (depth k-1+1 = k) -> l1^a l2^... at z-exp 0, depth k+1.
    out: Series = {}
    for (ua, un), uc in inner.items():
        if ua.denominator != 1:
            raise ValueError("non-integer ell exponent from substitution")
        kk = (Fraction(0), (int(ua),) + tuple(un))
        if out_caps.keeps(kk):
            s = out.get(kk, Fraction(0)) + uc
            if s:
                out[kk] = s
            else:
                out.pop(kk, None)
    return out


def integrate(f: Series, caps: Caps) -> Series:
    """Term-wise antiderivative at depth k+1."""
    out: Series = {}
    for k, c in f.items():
        out = add(out, integrate_monomial(k, c, caps))
    return out


def drop_last_ell(f: Series) -> Series:
    """Inverse of depth promotion, asserting the last exponent is always 0."""
    out: Series = {}
    for (a, n), c in f.items():
        assert n[-1] == 0, f"depth-promoted term {((a, n), c)} present"
        out[(a, n[:-1])] = c
    return out


# ---------------------------------------------------------------------------
# Composition through the functional equations
# ---------------------------------------------------------------------------

def compose(f: Series, g: Series, caps: Caps) -> Series:
    """f o g for parabolic g = z(1+u), ord(u) > 0.

    Uses l1(g) = l1/(1 - l1 log(1+u)) and inductively
    l_{j+1}(g) = l_{j+1}/(1 - l_{j+1} w_j) with w_j = -log(1 - l_j w_{j-1}),
    w_0 = log(1+u); z^alpha o g = z^alpha (1+u)^alpha by binomial series.
    """
    depth = caps.depth
    one = monomial(0, [0] * depth)
    gu = {(a - 1, n): c for (a, n), c in g.items()}
    u = sub(gu, one)
    if any(not (k[0] > 0 or (k[0] == 0 and k[1] > (0,) * depth)) for k in u):
        raise ValueError("compose: g must be parabolic (g - z of positive order)")

    # v_j with l_j(g) = l_j (1 + v_j)
    vs = []
    w = log1p(u, caps)  # w_0
    for j in range(depth):
        lj = monomial(0, [1 if i == j else 0 for i in range(depth)])
        ljw = mul(lj, w, caps)
        # l_j(g) = l_j / (1 - l_j w_{j-1}) = l_j (1 + v_j), v_j = ljw/(1-ljw)...
        # (1 - x)^{-1} = 1 + x + x^2 + ...; v_j = sum_{i>=1} (ljw)^i
        vj: Series = {}
        for p in power_list(ljw, caps):
            vj = add(vj, p)
        vs.append(vj)
        if j + 1 < depth:
            w = neg(log1p(neg(ljw), caps))  # w_j = -log(1 - l_j w_{j-1})

    # Cache integer powers (1+v_j)^n
    pow_cache = [dict() for _ in range(depth)]

    def v_pow(j: int, n: int) -> Series:
        if n == 0:
            return one
        cache = pow_cache[j]
        if n not in cache:
            cache[n] = binom_series(n, vs[j], caps)
        return cache[n]

    alpha_cache: dict[Fraction, Series] = {}

    def u_pow(alpha: Fraction) -> Series:
        if alpha not in alpha_cache:
            alpha_cache[alpha] = binom_series(alpha, u, caps)
        return alpha_cache[alpha]

    out: Series = {}
    for (a, n), c in f.items():
        term = monomial(a, n, c)
        term = mul(term, u_pow(a), caps)
        for j in range(depth):
            if n[j]:
                term = mul(term, v_pow(j, n[j]), caps)
        out = add(out, term)
    return trunc(out, caps)


def invert(phi: Series, caps: Caps) -> Series:
    """Compositional inverse of parabolic phi, via psi <- id - (phi - id) o psi."""
    depth = caps.depth
    iden = identity(depth)
    eps = sub(phi, iden)
    psi = iden
    for _ in range(400):
        nxt = trunc(sub(iden, compose(eps, psi, caps)), caps)
        if nxt == psi:
            return psi
        psi = nxt
    raise RuntimeError("invert: no fixed point within iteration budget")


def conjugate(phi: Series, f: Series, caps: Caps) -> Series:
    """phi o f o phi^{-1}."""
    return compose(compose(phi, f, caps), invert(phi, caps), caps)


# ---------------------------------------------------------------------------
# Brute-force normal form: eliminate coefficients one key at a time
# ---------------------------------------------------------------------------

def eliminate(f: Series, keep: set, caps: Caps, max_sweeps: int = 400,
              track_phi: bool = False):
    """Conjugate away every term of f - id except those whose keys are in
    ``keep``, sweeping keys in increasing order.  For each offending key kappa
    a candidate generator monomial is chosen, its (empirically affine) effect
    on the kappa-coefficient is measured at t = 0 and t = 1, and t is solved
    for.  Returns (normal_form, phi, residual_like) where residual_like maps
    kept keys to their final coefficients.

    This is intentionally algorithm-free with respect to the library: it uses
    only composition and linear solves, so its output is an independent check
    on the structured normal-form pipeline.
    """
    depth = caps.depth
    iden = identity(depth)
    k0 = ord_key(sub(f, iden))
    assert k0 is not None and k0[0] >= 1
    beta, n = k0
    phi_total = iden
    non_eliminable: set = set()

    def offending(cur: Series):
        for k in sorted(sub(cur, iden).keys()):
            if k == k0 or k in keep or k in non_eliminable:
                continue
            yield k

    cur = trunc(f, caps)
    for _ in range(max_sweeps):
        bad = next(iter(offending(cur)), None)
        if bad is None:
            return cur, phi_total, non_eliminable
        # Candidate generators: primary (kappa_z - beta + 1, kappa_n - n), then
        # ell-shifted variants for slope-zero cases.  Ascending shift depth j is
        # essential: the j-shifted generator's side effect at j' < j has the
        # same slope as the j'-shifted candidate's target slope, so taking the
        # first j with nonzero slope guarantees every disturbance lands at a
        # key strictly above the one being eliminated.
        cands = [(bad[0] - beta + 1, tuple(b - a for a, b in zip(n, bad[1])))]
        for j in range(1, depth + 1):
            cands.append((cands[0][0],
                          tuple(e - (1 if i < j else 0) for i, e in enumerate(cands[0][1]))))
        solved = False
        for galpha, gells in cands:
            if galpha < 1 or (galpha == 1 and not gells > (0,) * depth):
                continue
            gen = monomial(galpha, gells)
            phi1 = add(iden, gen)
            c0 = coeff(cur, bad)
            c1 = coeff(conjugate(phi1, cur, caps), bad)
            slope = c1 - c0
            if slope == 0:
                continue
            t = -c0 / slope
            phi_t = add(iden, scal(t, gen))
            new_cur = conjugate(phi_t, cur, caps)
            assert coeff(new_cur, bad) == 0, "affine model failed"
            cur = new_cur
            if track_phi:
                phi_total = trunc(compose(phi_t, phi_total, caps), caps)
            solved = True
            break
        if not solved:
            non_eliminable.add(bad)
    raise RuntimeError("eliminate: sweep budget exhausted")


def schroder_solve(f: Series, g: Series, caps: Caps, max_steps: int = 600) -> Series:
    """Find parabolic phi with phi o f = g o phi by greedy leading-residual
    corrections, confirming that f and g are conjugate below the caps.

    At each step the leading key kappa of r(phi) = phi o f - g o phi is
    attacked with a generator monomial at key kappa - ord(f-id) + (1, 0..0)
    (ell-shifted downward if the measured slope vanishes, shallowest shift
    first).  The kappa-coefficient's response is affine in the generator
    weight because quadratic contributions land strictly above kappa; this is
    asserted, as is strict progress of the residual order.  Raises if f and g
    are not conjugate (no generator moves the leading residual).
    """
    depth = caps.depth
    iden = identity(depth)
    beta0 = ord_key(sub(f, iden))
    assert beta0 is not None
    phi = iden

    def residual(p: Series) -> Series:
        return trunc(sub(compose(p, f, caps), compose(g, p, caps)), caps)

    r = residual(phi)
    for _ in range(max_steps):
        if not r:
            return phi
        bad = ord_key(r)
        c0 = r[bad]
        cands = [(bad[0] - beta0[0] + 1,
                  tuple(b - a for a, b in zip(beta0[1], bad[1])))]
        for j in range(1, depth + 1):
            cands.append((cands[0][0],
                          tuple(e - (1 if i < j else 0)
                                for i, e in enumerate(cands[0][1]))))
        for ga, gn in cands:
            if ga < 1 or (ga == 1 and not gn > (0,) * depth):
                continue
            gen = monomial(ga, gn)
            r1 = residual(add(phi, gen))
            slope = coeff(r1, bad) - c0
            if slope == 0:
                continue
            cand = add(phi, scal(-c0 / slope, gen))
            r2 = residual(cand)
            assert coeff(r2, bad) == 0, "leading response not affine"
            new_ord = ord_key(r2)
            assert new_ord is None or lex_lt(bad, new_ord), "no strict progress"
            phi, r = cand, r2
            break
        else:
            raise RuntimeError(f"schroder_solve: residual key {bad} immovable")
    raise RuntimeError("schroder_solve: step budget exhausted")


# ---------------------------------------------------------------------------
# Vector-field flow
# ---------------------------------------------------------------------------

def flow_time_one(F: Series, caps: Caps, max_terms: int = 400) -> Series:
    """Time-one map of X = F d/dz: exp(X).id = sum X^n.id / n!.

    X.g = F g'; the sum terminates under caps because ord(F) > (1, 0..0).
    """
    term = identity(caps.depth)
    out = term
    fact = Fraction(1)
    for i in range(1, max_terms):
        term = trunc(mul(F, deriv(term, caps), caps), caps)
        if not term:
            return out
        fact /= i
        out = add(out, scal(fact, term))
    raise RuntimeError("flow: did not terminate")


# ---------------------------------------------------------------------------
# Serialization helpers for frozen test data
# ---------------------------------------------------------------------------

def to_jsonable(f: Series):
    """Sorted [[alpha, [n...], coeff], ...] with rationals as 'p/q' strings."""
    def frac(x: Fraction) -> str:
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    return [[frac(k[0]), list(k[1]), frac(c)] for k, c in sorted(f.items())]


def from_jsonable(data) -> Series:
    out: Series = {}
    for a, n, c in data:
        out[(Fraction(a), tuple(n))] = Fraction(c)
    return out


# ---------------------------------------------------------------------------
# Self-checks (run on import in generator scripts, cheap)
# ---------------------------------------------------------------------------

def _selfcheck():
    rng = random.Random(7)
    caps = Caps(5, [6, 6])
    iden = identity(2)

    # composition with identity
    f = add(iden, add(monomial(2, [1, 0], 3), monomial(Fraction(3, 2), [0, 2], Fraction(-1, 2))))
    assert compose(f, iden, caps) == trunc(f, caps)

    # associativity of composition on random parabolic maps
    def rand_parabolic():
        g = identity(2)
        for _ in range(3):
            a = Fraction(rng.randint(1, 3))
            n = [rng.randint(0, 2), rng.randint(0, 2)]
            if a == 1 and n == [0, 0]:
                n[0] = 1
            g = add(g, monomial(a, n, Fraction(rng.randint(-3, 3), rng.randint(1, 3))))
        return g

    for _ in range(3):
        g, h = rand_parabolic(), rand_parabolic()
        lhs = compose(compose(f, g, caps), h, caps)
        rhs = compose(f, compose(g, h, caps), caps)
        assert lhs == rhs, "composition not associative"

    # inverse
    for _ in range(3):
        phi = rand_parabolic()
        psi = invert(phi, caps)
        assert compose(phi, psi, caps) == trunc(iden, caps)
        assert compose(psi, phi, caps) == trunc(iden, caps)

    # chain rule: (f o g)' = (f' o g) g'
    g = rand_parabolic()
    small = Caps(4, [4, 4])
    lhs = trunc(deriv(compose(f, g, caps), caps), small)
    rhs = trunc(mul(compose(deriv(f, caps), g, caps), deriv(g, caps), caps), small)
    assert lhs == rhs, "chain rule failed"

    # derivative of l_j matches l_j' = (1/z) l1..l_{j-1} l_j^2
    for j in (0, 1):
        lj = monomial(0, [1 if i == j else 0 for i in range(2)])
        expect = monomial(-1, [2, 0] if j == 0 else [1, 2])
        assert deriv(lj, caps) == trunc(expect, caps)

    # integration undoes differentiation on random monomials (incl. promotion)
    icaps = Caps(6, [8, 8])
    for k, c in [((Fraction(2), (1, 0)), Fraction(3)),
                 ((Fraction(-1), (2, 1)), Fraction(1, 2)),
                 ((Fraction(-1), (1, 1)), Fraction(5))]:
        F = integrate_monomial(k, c, icaps)
        dcaps = Caps(icaps.zcap, list(icaps.ellcaps) + [10])
        back = deriv(F, dcaps)
        target = {(k[0], k[1] + (0,)): c}
        diff = sub(back, target)
        # agreement below the caps that survived integration truncation
        bound = Caps(4, [6, 6, 6])
        assert not trunc(diff, bound), f"integrate/deriv mismatch for {k}: {trunc(diff, bound)}"

    # geometric inverse
    q = add(monomial(1, [1, 0]), monomial(1, [2, 0], 2))
    qi = inverse_mult(q, caps)
    prod = mul(q, qi, caps)
    assert coeff(prod, (Fraction(0), (0, 0))) == 1

    # flow of z^2 d/dz (k=0) is z + z^2 + z^3 + ... = z/(1-z)
    caps0 = Caps(6, [])
    Fv = monomial(2, [])
    fl = flow_time_one(Fv, caps0)
    expect = {(Fraction(i), ()): Fraction(1) for i in range(1, 6)}
    assert fl == expect, f"flow mismatch: {fl}"


_selfcheck()
