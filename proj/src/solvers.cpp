// SPDX-License-Identifier: MIT
#include "translog/solvers.hpp"

#include "translog/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <utility>

namespace translog {

namespace {

std::vector<int> zeros(int depth)
{
    return std::vector<int>(static_cast<std::size_t>(depth), 0);
}

Transseries one_series(int depth)
{
    return Transseries::constant(depth, Rational{1});
}

ExponentKey ell_key(int depth, int level, int power)
{
    ExponentKey key{Rational{0}, zeros(depth)};
    key.ell[static_cast<std::size_t>(level) - 1] = power;
    return key;
}

Transseries ell_mono(int depth, int level, int power)
{
    return Transseries::monomial(ell_key(depth, level, power), Rational{1});
}

/// Value of the coefficient stream at Q (zero argument short-circuits; the
/// streams all vanish at 0).
Transseries series_value(const PowerSeriesSpec& h, const Transseries& Q)
{
    if (Q.is_zero()) {
        return Transseries::zero(Q.depth());
    }
    return apply_series(h, Q);
}

/// Value of the term-by-term derivative of the coefficient stream at Q.
/// The derivative of every built-in stream is again expressible through the
/// built-ins; custom streams differentiate their finitely many terms.
Transseries series_derivative_value(const PowerSeriesSpec& h, const Transseries& Q)
{
    const int k = Q.depth();
    const Transseries one = one_series(k);
    switch (h.kind) {
    case PowerSeriesSpec::Kind::Log1p:
        // (log(1+x))' = (1+x)^{-1}
        return add(one, series_value(PowerSeriesSpec::binomial(Rational{-1}), Q));
    case PowerSeriesSpec::Kind::OnePlusXLog1pMinusX:
        // ((1+x)log(1+x) - x)' = log(1+x)
        return series_value(PowerSeriesSpec::log1p(), Q);
    case PowerSeriesSpec::Kind::Binomial:
        // ((1+x)^b - 1)' = b(1+x)^{b-1}
        return scale(h.beta,
                     add(one, series_value(PowerSeriesSpec::binomial(h.beta - 1), Q)));
    case PowerSeriesSpec::Kind::Exp:
        // (exp(x) - 1)' = exp(x)
        return add(one, series_value(PowerSeriesSpec::exp(), Q));
    case PowerSeriesSpec::Kind::Custom:
        break;
    }
    Transseries S = Transseries::zero(k);
    Transseries pow = one;
    for (int i = 1; i < h.custom_start; ++i) {
        pow = mul(pow, Q);
    }
    long degree = h.custom_start;
    for (const Transseries& c : h.custom_coeffs) {
        S = add(S, scale(Rational{degree}, mul(c, pow)));
        pow = mul(pow, Q);
        ++degree;
    }
    return S;
}

/// Slice of the terms whose shallowest active scale is exactly `level`.
Transseries level_component(const Transseries& f, int level)
{
    std::vector<Term> kept;
    for (const Term& t : f.terms()) {
        if (sgn(t.key.alpha) != 0) {
            continue;
        }
        int first_active = 0;
        for (int j = 0; j < f.depth(); ++j) {
            if (t.key.ell[static_cast<std::size_t>(j)] != 0) {
                first_active = j + 1;
                break;
            }
        }
        if (first_active == level) {
            kept.push_back(t);
        }
    }
    return Transseries{f.depth(), std::move(kept), f.region()};
}

/// Projection onto the keys whose (z, ell_1, ..., ell_level) prefix lies
/// below (0, 0, ..., 0, bound).
Transseries prefix_below(const Transseries& f, int level, int bound)
{
    std::vector<int> prefix(static_cast<std::size_t>(level), 0);
    prefix[static_cast<std::size_t>(level) - 1] = bound;
    return project(f, PartialKey{Rational{0}, std::move(prefix)}, ProjectMode::LT);
}

void require_block_support(const Transseries& f, int level, const char* who)
{
    for (const Term& t : f.terms()) {
        if (sgn(t.key.alpha) != 0) {
            throw InvariantViolation{std::string{who} + ": term " + to_string(t.key) +
                                     " carries a power of z"};
        }
        for (int j = 0; j + 1 < level; ++j) {
            if (t.key.ell[static_cast<std::size_t>(j)] != 0) {
                throw InvariantViolation{std::string{who} + ": term " + to_string(t.key) +
                                         " involves a scale shallower than level " +
                                         std::to_string(level)};
            }
        }
    }
}

using HEval = std::function<Transseries(const Transseries&)>;

/// Canonical solution of the level-confined linear equation
///   [P * D(S) - S * D(P)]_{< (0_level, 2n+1)} = K
/// where n is P's ell-order at `level` and D differentiates with respect to
/// that level's scale.  Splitting P into its leading slice and its tail
/// turns the leading part into a closed-form weighted integration; the tail
/// feeds back through a contraction.  The returned terms all have ell-order
/// below n at `level` (no integration constant).
Transseries linear_block_ode(const Transseries& P, const Transseries& K, int level)
{
    const int k = P.depth();
    if (K.is_zero()) {
        return Transseries::zero(k, K.region());
    }
    const BlockSeries Pb{level, P};
    const int n = *ord_ell(Pb, level);
    const Transseries lead = mul(ell_mono(k, level, n), leading_block_ell(Pb, level).series);
    const Transseries tail = sub(P, lead);
    const Transseries lead_inv2 = inverse_mult(mul(lead, lead));
    const Transseries d_tail = tail.is_zero() ? tail : block_derive_series(tail, level);
    const int cut = 2 * n + 1;
    auto step = [&](const Transseries& S) {
        Transseries val = K;
        if (!tail.is_zero() && !S.is_zero()) {
            val = sub(val, mul(tail, block_derive_series(S, level)));
            val = add(val, mul(S, d_tail));
        }
        const Transseries projected = prefix_below(val, level, cut);
        return mul(lead, block_antiderivative(mul(projected, lead_inv2), level));
    };
    return picard_solve(step, Transseries::zero(k), {}, 0, K.region()).first;
}

/// Canonical solution of D(S) - (D(N)/N + P) * S + T * h(S) = M at `level`
/// (D with respect to that level's scale), with ord(S) > ord(N).  The
/// homogeneous solution N * exp(int P) turns the linear part into a
/// weighted integration; T feeds back through a contraction.
Transseries level_ode(const Transseries& N, const Transseries& P, const Transseries& T,
                      const Transseries& M, const HEval& h_eval, int level)
{
    const int k = N.depth();
    if (M.is_zero()) {
        return Transseries::zero(k, M.region());
    }
    Transseries factor = N;
    Transseries factor_inv = inverse_mult(N);
    if (!P.is_zero()) {
        // exp(int P) grown through its defining equation D(g) = P * g: the
        // power-by-power exponential substitution folds the window once per
        // power, which collapses the certified box whenever int P carries
        // negative deep exponents; one integration per round does not.
        const Transseries one = one_series(k);
        auto weight = [&](const Transseries& drive) {
            auto step = [&](const Transseries& g) {
                return block_antiderivative(mul(drive, add(one, g)), level);
            };
            return add(one,
                       picard_solve(step, Transseries::zero(k), {}, 0, drive.region()).first);
        };
        factor = mul(N, weight(P));
        factor_inv = mul(weight(negate(P)), factor_inv);
    }
    auto step = [&](const Transseries& S) {
        Transseries rhs = M;
        if (!T.is_zero()) {
            rhs = sub(rhs, mul(T, h_eval(S)));
        }
        return mul(factor, block_antiderivative(mul(rhs, factor_inv), level));
    };
    return picard_solve(step, Transseries::zero(k), {}, 0, M.region()).first;
}

/// Splits a block into  sum_{i=1}^{m} ell_1...ell_i f_i  with f_i active at
/// level i and deeper, and returns the divided components f_1, ..., f_m.
/// A term's bucket is the first scale whose exponent is not one (capped at
/// m); shallower exponents must all be one, the bucket exponent must be at
/// least two when the bucket is shallower than m.  When `deepest_min_zero`
/// is set the deepest component may contain constants, otherwise it must
/// start positively.
std::vector<Transseries> prefix_decompose(const Transseries& f, int m, bool deepest_min_zero,
                                          const char* who)
{
    const int k = f.depth();
    std::vector<std::vector<Term>> buckets(static_cast<std::size_t>(m));
    for (const Term& t : f.terms()) {
        if (sgn(t.key.alpha) != 0) {
            throw InvariantViolation{std::string{who} + ": term " + to_string(t.key) +
                                     " carries a power of z"};
        }
        int b = m;
        for (int j = 1; j < m; ++j) {
            const int e = t.key.ell[static_cast<std::size_t>(j) - 1];
            if (e == 1) {
                continue;
            }
            if (e < 2) {
                throw InvariantViolation{std::string{who} + ": term " + to_string(t.key) +
                                         " does not factor through the iterated-log prefix"};
            }
            b = j;
            break;
        }
        Term d = t;
        for (int j = 0; j < b; ++j) {
            d.key.ell[static_cast<std::size_t>(j)] -= 1;
        }
        if (b == m) {
            int sign = 0;
            for (int j = 0; j < k; ++j) {
                const int e = d.key.ell[static_cast<std::size_t>(j)];
                if (e != 0) {
                    sign = e > 0 ? 1 : -1;
                    break;
                }
            }
            if (sign < 0 || (sign == 0 && !deepest_min_zero)) {
                throw InvariantViolation{std::string{who} + ": term " + to_string(t.key) +
                                         " does not factor through the iterated-log prefix"};
            }
        }
        buckets[static_cast<std::size_t>(b) - 1].push_back(d);
    }
    std::vector<Transseries> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int b = 1; b <= m; ++b) {
        ExponentKey delta{Rational{0}, zeros(k)};
        for (int j = 0; j < b; ++j) {
            delta.ell[static_cast<std::size_t>(j)] = -1;
        }
        out.push_back(Transseries{k, std::move(buckets[static_cast<std::size_t>(b) - 1]),
                                  f.region().shifted(delta)});
    }
    return out;
}

} // namespace

Rational contraction_rate(const Rational& gamma, const Rational& beta, const Rational& delta,
                          const Rational& alpha)
{
    const Rational from_target = gamma - 1;
    const Rational from_kernel = 2 * (beta - 1);
    const Rational from_distance = delta + alpha - 2;
    return std::min(std::min(from_target, from_kernel), from_distance);
}

std::pair<Transseries, PicardTrace> picard_solve(const PicardStep& step, Transseries x0,
                                                 const ProgressMeasure& progress,
                                                 long max_iters,
                                                 const std::optional<ValidityRegion>& pin)
{
    if (!step) {
        throw ZeroInput{"picard_solve: empty step"};
    }
    PicardTrace trace;
    Transseries x = std::move(x0);
    if (pin) {
        x = x.with_region(*pin);
    }
    const int silent_limit = 2 * x.depth() + 2;
    int silent = 0;
    long rounds = 0;
    for (;;) {
        const long cap = max_iters > 0
                             ? max_iters
                             : std::max(iteration_budget(x.region()), static_cast<long>(256));
        if (rounds >= cap) {
            throw MaxIterationsExceeded{"picard_solve: no fixed point within " +
                                        std::to_string(cap) + " rounds (" +
                                        std::to_string(trace.iterations) + " productive)"};
        }
        ++rounds;
        Transseries next = step(x);
        if (next.depth() != x.depth()) {
            throw DepthMismatch{"picard_solve: the step changed the depth"};
        }
        const Transseries diff = sub(next, x);
        if (std::getenv("TRANSLOG_DEBUG_PICARD") != nullptr) {
            auto reg = [](const ValidityRegion& r) {
                std::string s = "G=" + to_string(r.G) + " E=[";
                for (std::size_t i = 0; i < r.E.size(); ++i) {
                    if (i) s += ",";
                    s += std::to_string(r.E[i]);
                }
                return s + "]";
            };
            std::cerr << "[picard] round " << rounds << " next(" << next.terms().size()
                      << " terms, " << reg(next.region()) << ") diff("
                      << diff.terms().size() << " terms";
            if (!diff.is_zero()) {
                std::cerr << ", ord " << to_string(ord(diff));
            }
            std::cerr << ", " << reg(diff.region()) << ")\n";
            if (!diff.is_zero() && diff.terms().size() <= 12) {
                std::cerr << "  diff = " << render(diff) << "\n";
            }
        }
        if (diff.is_zero()) {
            // A pinned iterate is an exact finite series, so an unchanged
            // round already certifies the fixed point below the folded
            // window; otherwise wait for the windows to settle as well.
            if (pin || next.region() == x.region() || ++silent >= silent_limit) {
                trace.converged = true;
                return {std::move(next), std::move(trace)};
            }
        } else {
            silent = 0;
            const OrderValue o = progress ? progress(diff) : ord(diff);
            if (!trace.residual_orders.empty()) {
                const OrderValue& prev = trace.residual_orders.back();
                if (!prev.infinite && compare(o, prev) != std::strong_ordering::greater) {
                    throw NonContraction{"picard_solve: correction order went from " +
                                         to_string(prev) + " to " + to_string(o) + " after " +
                                         std::to_string(trace.iterations) +
                                         " productive rounds"};
                }
            }
            trace.residual_orders.push_back(o);
            ++trace.iterations;
        }
        x = std::move(next);
        if (pin) {
            x = x.with_region(*pin);
        }
    }
}

Transseries block_antiderivative(const Transseries& K, int level)
{
    const int k = K.depth();
    if (level < 1 || level > k) {
        throw DepthMismatch{"block_antiderivative: level " + std::to_string(level) +
                            " out of range for depth " + std::to_string(k)};
    }
    require_block_support(K, level, "block_antiderivative");
    {
        ExponentKey tower{Rational{0}, zeros(k)};
        for (int j = level - 1; j < k; ++j) {
            tower.ell[static_cast<std::size_t>(j)] = 1;
        }
        if (sgn(K.stored_coefficient(tower)) != 0) {
            throw InvariantViolation{"block_antiderivative: the summand " + to_string(tower) +
                                     " has no primitive at depth " + std::to_string(k)};
        }
    }
    // One integration step against the level's scale tightens the window by
    // one at that coordinate.
    ExponentKey delta{Rational{0}, zeros(k)};
    delta.ell[static_cast<std::size_t>(level) - 1] = -1;
    const ValidityRegion out_region = K.region().shifted(delta);
    if (K.is_zero()) {
        return Transseries::zero(k, out_region);
    }
    // Work in the variable w = ell_level; the deeper scales are exactly the
    // iterated logarithms of w, so each summand integrates like a monomial
    // of the shallower calculus at depth k - level.
    const int wdepth = k - level;
    const ValidityRegion& R = K.region();
    ValidityRegion wtarget{OrderValue::infinity(),
                           std::vector<int>(R.E.begin() + level, R.E.end())};
    if (R.E[static_cast<std::size_t>(level) - 1] != kUnboundedEll) {
        wtarget.G = OrderValue::finite(
            ExponentKey{Rational{R.E[static_cast<std::size_t>(level) - 1] + 1}, zeros(wdepth)});
    }
    Transseries acc = Transseries::zero(k, out_region);
    for (const Term& t : K.terms()) {
        const ExponentKey wkey{Rational{t.key.ell[static_cast<std::size_t>(level) - 1] - 2},
                               std::vector<int>(t.key.ell.begin() + level, t.key.ell.end())};
        const Transseries inner = integrate_monomial(wkey, wtarget);
        if (inner.depth() != wdepth) {
            throw InvariantViolation{"block_antiderivative: unexpected depth escalation"};
        }
        std::vector<Term> mapped;
        mapped.reserve(inner.size());
        for (const Term& it : inner.terms()) {
            ExponentKey key{Rational{0}, zeros(k)};
            key.ell[static_cast<std::size_t>(level) - 1] = static_cast<int>(to_long(it.key.alpha));
            for (int j = 0; j < wdepth; ++j) {
                key.ell[static_cast<std::size_t>(level + j)] =
                    it.key.ell[static_cast<std::size_t>(j)];
            }
            mapped.push_back(Term{std::move(key), it.coeff * t.coeff});
        }
        acc = add(acc, Transseries{k, std::move(mapped), out_region});
    }
    return acc;
}

BlockSeries solve_block_algebraic(const BlockSeries& R1, const BlockSeries& R2,
                                  const PowerSeriesSpec& h, const BlockSeries& M, int level)
{
    const int k = M.depth();
    if (R1.depth() != k || R2.depth() != k) {
        throw DepthMismatch{"solve_block_algebraic: depths differ"};
    }
    if (level < 1 || level > k) {
        throw DepthMismatch{"solve_block_algebraic: level " + std::to_string(level) +
                            " out of range for depth " + std::to_string(k)};
    }
    const ExponentKey zero_key{Rational{0}, zeros(k)};
    if (R1.is_zero() || !(leading_term(R1.series).key == zero_key)) {
        throw InvariantViolation{"solve_block_algebraic: leading-term precondition violated "
                                 "(R1 must start with a nonzero constant)"};
    }
    if (!R2.is_zero() && !(leading_term(R2.series).key == zero_key)) {
        throw InvariantViolation{"solve_block_algebraic: leading-term precondition violated "
                                 "(R2 must start with a nonzero constant when present)"};
    }
    if (M.is_zero()) {
        return BlockSeries{level, Transseries::zero(k, M.series.region())};
    }
    to_block(M.series, level);
    const Transseries& R1s = R1.series;
    const bool nonlinear = !R2.is_zero();
    Transseries Qacc = Transseries::zero(k);
    // Deepest level first: every solved level stays solved, because later
    // (shallower) corrections only touch shallower first-active slices.
    for (int i = k; i >= level; --i) {
        Transseries residual = sub(M.series, mul(R1s, Qacc));
        Transseries hQ = Transseries::zero(k);
        Transseries hpQ = Transseries::zero(k);
        if (nonlinear) {
            hQ = series_value(h, Qacc);
            hpQ = series_derivative_value(h, Qacc);
            residual = sub(residual, mul(R2.series, hQ));
        }
        const Transseries rhs = level_component(residual, i);
        if (rhs.is_zero()) {
            continue;
        }
        Transseries A = R1s;
        if (nonlinear && !hpQ.is_zero()) {
            A = add(R1s, mul(R2.series, hpQ));
        }
        const Transseries A_inv = inverse_mult(A);
        const Transseries base = Qacc;
        auto step = [&, base, hQ, hpQ](const Transseries& Q) {
            Transseries val = rhs;
            if (nonlinear && !Q.is_zero()) {
                const Transseries beyond_linear =
                    sub(series_value(h, add(base, Q)), add(hQ, mul(hpQ, Q)));
                val = sub(val, mul(R2.series, beyond_linear));
            }
            return mul(A_inv, val);
        };
        Qacc = add(Qacc, picard_solve(step, Transseries::zero(k), {}, 0, rhs.region()).first);
    }
    return BlockSeries{level, Qacc};
}

Transseries solve_lie_bracket(const Rational& a, const Rational& beta, const std::vector<int>& n,
                              const Transseries& g, const ExponentKey& kill)
{
    const int k = g.depth();
    if (static_cast<int>(n.size()) != k || kill.depth() != k) {
        throw DepthMismatch{"solve_lie_bracket: depth mismatch"};
    }
    if (sgn(a) == 0) {
        throw ZeroInput{"solve_lie_bracket: the leading coefficient must be nonzero"};
    }
    const ExponentKey kernel_key{beta, n};
    if (!(kill == kernel_key)) {
        throw InvariantViolation{"solve_lie_bracket: the integration constant can only cancel "
                                 "the kernel coefficient at " + to_string(kernel_key)};
    }
    std::vector<int> doubled(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        doubled[static_cast<std::size_t>(j)] = 2 * n[static_cast<std::size_t>(j)] + 1;
    }
    const ExponentKey obstruction{2 * beta - 1, std::move(doubled)};
    if (g.region().contains(obstruction) && sgn(g.stored_coefficient(obstruction)) != 0) {
        throw ResidualObstruction{"solve_lie_bracket: the coefficient " +
                                  to_string(g.stored_coefficient(obstruction)) + " at " +
                                  to_string(obstruction) + " obstructs the bracket equation"};
    }
    if (g.is_zero()) {
        return Transseries::zero(k, g.region());
    }
    const Transseries u = Transseries::monomial(kernel_key, a);
    std::vector<int> negated(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        negated[static_cast<std::size_t>(j)] = -2 * n[static_cast<std::size_t>(j)];
    }
    const Transseries u_inv2 =
        Transseries::monomial(ExponentKey{-2 * beta, std::move(negated)}, Rational{1} / (a * a));
    const Transseries primitive = integrate(mul(g, u_inv2));
    if (primitive.depth() != k) {
        throw InvariantViolation{"solve_lie_bracket: unexpected depth escalation"};
    }
    const Transseries eps = mul(u, primitive);
    const Rational kernel_coeff = coefficient(eps, kill);
    if (sgn(kernel_coeff) == 0) {
        return eps;
    }
    return sub(eps, scale(kernel_coeff / a, u));
}

BlockSeries solve_block_ode_level(const BlockSeries& P, const BlockSeries& K, int level,
                                  const ExponentKey& cutoff)
{
    const int k = P.depth();
    if (K.depth() != k || cutoff.depth() != k) {
        throw DepthMismatch{"solve_block_ode_level: depth mismatch"};
    }
    if (level < 1 || level > k) {
        throw DepthMismatch{"solve_block_ode_level: level " + std::to_string(level) +
                            " out of range for depth " + std::to_string(k)};
    }
    if (P.is_zero()) {
        throw ZeroInput{"solve_block_ode_level: P must be nonzero"};
    }
    require_block_support(P.series, level, "solve_block_ode_level");
    require_block_support(K.series, level, "solve_block_ode_level");
    const auto n_opt = ord_ell(BlockSeries{level, P.series}, level);
    if (!n_opt || *n_opt < 1) {
        throw InvariantViolation{
            "solve_block_ode_level: P must have positive ell-order at level " +
            std::to_string(level)};
    }
    const int cut = 2 * *n_opt + 1;
    bool cutoff_ok = sgn(cutoff.alpha) == 0 &&
                     cutoff.ell[static_cast<std::size_t>(level) - 1] == cut;
    for (int j = 0; cutoff_ok && j + 1 < level; ++j) {
        cutoff_ok = cutoff.ell[static_cast<std::size_t>(j)] == 0;
    }
    if (!cutoff_ok) {
        throw InvariantViolation{"solve_block_ode_level: the cutoff must be " +
                                 to_string(ell_key(k, level, cut)) +
                                 " up to its deeper coordinates"};
    }
    for (const Term& t : K.series.terms()) {
        if (t.key.ell[static_cast<std::size_t>(level) - 1] >= cut) {
            throw InvariantViolation{"solve_block_ode_level: K term " + to_string(t.key) +
                                     " reaches the projection bound"};
        }
    }
    if (K.is_zero()) {
        return BlockSeries{level, Transseries::zero(k, K.series.region())};
    }
    return BlockSeries{level, linear_block_ode(P.series, K.series, level)};
}

BlockSeries solve_nonlinear_block_ode(const BlockSeries& N, const BlockSeries& K,
                                      const BlockSeries& T, const BlockSeries& M,
                                      const PowerSeriesSpec& h)
{
    const int k = N.depth();
    if (K.depth() != k || T.depth() != k || M.depth() != k) {
        throw DepthMismatch{"solve_nonlinear_block_ode: depths differ"};
    }
    if (N.is_zero()) {
        throw ZeroInput{"solve_nonlinear_block_ode: N must be nonzero"};
    }
    // Splitting N along its active levels also validates its shape.
    const LevelDecomposition split = decompose_levels(to_block(N.series, 1));
    int m = split.level;
    for (std::size_t i = 0; i < split.components.size(); ++i) {
        if (!split.components[i].is_zero()) {
            m = split.level + static_cast<int>(i);
        }
    }
    const Transseries& Ns = N.series;
    const Transseries Nm = split.components[static_cast<std::size_t>(m - split.level)].series;
    const Transseries dN_over_N = mul(block_derive_series(Ns, 1), inverse_mult(Ns));
    const ExponentKey ones{Rational{0}, std::vector<int>(static_cast<std::size_t>(k), 1)};
    if (!K.is_zero() && !(ord(K.series) > ones)) {
        throw InvariantViolation{"solve_nonlinear_block_ode: ord(K) must exceed " +
                                 to_string(ones)};
    }
    if (!T.is_zero() && compare(ord(T.series), ord(dN_over_N)) == std::strong_ordering::less) {
        throw InvariantViolation{
            "solve_nonlinear_block_ode: ord(T) must not fall below ord(D(N)/N)"};
    }
    if (M.is_zero()) {
        return BlockSeries{1, Transseries::zero(k, M.series.region())};
    }
    if (!(ord(M.series) > ord(Ns) + ones)) {
        throw InvariantViolation{"solve_nonlinear_block_ode: ord(M) must exceed ord(N) + " +
                                 to_string(ones)};
    }
    Transseries P_full = sub(dN_over_N, mul(block_derive_series(Nm, 1), inverse_mult(Nm)));
    if (!K.is_zero()) {
        P_full = add(K.series, P_full);
    }
    const auto Mi = prefix_decompose(M.series, m, false, "solve_nonlinear_block_ode");
    const auto Pi = prefix_decompose(P_full, m, false, "solve_nonlinear_block_ode");
    const auto Ti = prefix_decompose(T.series, m, true, "solve_nonlinear_block_ode");
    Transseries Sacc;
    {
        const Transseries lm = ell_mono(k, m, 1);
        const HEval h_plain = [&h](const Transseries& Q) { return series_value(h, Q); };
        Sacc = level_ode(Nm, mul(lm, Pi[static_cast<std::size_t>(m) - 1]),
                         mul(lm, Ti[static_cast<std::size_t>(m) - 1]),
                         mul(lm, Mi[static_cast<std::size_t>(m) - 1]), h_plain, m);
    }
    for (int i = m - 1; i >= 1; --i) {
        Transseries P_stack = Pi[static_cast<std::size_t>(i) - 1];
        Transseries T_stack = Ti[static_cast<std::size_t>(i) - 1];
        Transseries prefix = one_series(k);
        for (int j = i + 1; j <= m; ++j) {
            prefix = mul(prefix, ell_mono(k, j, 1));
            P_stack = add(P_stack, mul(prefix, Pi[static_cast<std::size_t>(j) - 1]));
            T_stack = add(T_stack, mul(prefix, Ti[static_cast<std::size_t>(j) - 1]));
        }
        const Transseries hS = series_value(h, Sacc);
        const Transseries hpS = series_derivative_value(h, Sacc);
        const Transseries li = ell_mono(k, i, 1);
        const Transseries P_lvl = mul(li, sub(P_stack, mul(T_stack, hpS)));
        const Transseries T_lvl = mul(li, T_stack);
        const Transseries M_lvl =
            mul(li, add(Mi[static_cast<std::size_t>(i) - 1],
                        sub(mul(Pi[static_cast<std::size_t>(i) - 1], Sacc),
                            mul(Ti[static_cast<std::size_t>(i) - 1], hS))));
        const Transseries base = Sacc;
        // Re-center the stream at the partial solution: the remaining
        // corrections see h(base + Q) minus its linearisation.
        const HEval h_shift = [&h, base, hS, hpS](const Transseries& Q) {
            return sub(series_value(h, add(base, Q)), add(hS, mul(hpS, Q)));
        };
        Sacc = add(Sacc, level_ode(Nm, P_lvl, T_lvl, M_lvl, h_shift, i));
    }
    return BlockSeries{1, Sacc};
}

BlockSeries solve_quasilinear_block(const BlockSeries& N, const BlockSeries& T, int n,
                                    const PowerSeriesSpec& h)
{
    const int k = N.depth();
    if (T.depth() != k) {
        throw DepthMismatch{"solve_quasilinear_block: depths differ"};
    }
    if (N.is_zero()) {
        throw ZeroInput{"solve_quasilinear_block: N must be nonzero"};
    }
    if (n < 1) {
        throw InvariantViolation{"solve_quasilinear_block: the eigenvalue shift must be positive"};
    }
    if (h.first_degree() < 2) {
        throw InvariantViolation{
            "solve_quasilinear_block: the stream must vanish to second order at 0"};
    }
    const int level = N.level;
    to_block(N.series, level);
    if (T.is_zero()) {
        return BlockSeries{level, Transseries::zero(k, T.series.region())};
    }
    to_block(T.series, level);
    if (!(compare(ord(T.series), ord(N.series)) == std::strong_ordering::greater)) {
        throw InvariantViolation{"solve_quasilinear_block: ord(T) must exceed ord(N)"};
    }
    const Transseries N_inv = inverse_mult(N.series);
    const Transseries T_over_N = mul(T.series, N_inv);
    const Transseries dN_over_N = mul(block_derive_series(N.series, level), N_inv);
    const Rational shift{static_cast<long>(n)};
    const BlockSeries R1{level, sub(T_over_N, Transseries::constant(k, shift))};
    const BlockSeries R2{level, Transseries::constant(k, -shift)};
    auto step = [&](const Transseries& S) {
        const Transseries with_stream = add(S, series_value(h, S));
        Transseries rhs = add(mul(with_stream, dN_over_N), T_over_N);
        if (!S.is_zero()) {
            rhs = sub(rhs, block_derive_series(S, level));
        }
        return solve_block_algebraic(R1, R2, h, BlockSeries{level, rhs}, level).series;
    };
    return BlockSeries{level,
                       picard_solve(step, Transseries::zero(k), {}, 0, T_over_N.region()).first};
}

BlockSeries solve_projected_conjugacy_ode(const BlockSeries& L, const BlockSeries& V,
                                          const ContractionMap& C_m, const PowerSeriesSpec& h,
                                          const ExponentKey& r0)
{
    const int k = L.depth();
    const int m = L.level;
    if (V.depth() != k || r0.depth() != k) {
        throw DepthMismatch{"solve_projected_conjugacy_ode: depth mismatch"};
    }
    if (L.is_zero()) {
        throw ZeroInput{"solve_projected_conjugacy_ode: L must be nonzero"};
    }
    to_block(L.series, m);
    const ExponentKey lead_key = ord(L.series).key;
    if (sgn(lead_key.alpha) != 0) {
        throw InvariantViolation{"solve_projected_conjugacy_ode: L must be purely logarithmic"};
    }
    std::vector<int> n_level;
    n_level.reserve(static_cast<std::size_t>(k - m + 1));
    for (int i = m; i <= k; ++i) {
        const int ni = lead_key.ell[static_cast<std::size_t>(i) - 1];
        if (ni < 1) {
            throw InvariantViolation{
                "solve_projected_conjugacy_ode: every scale from level " + std::to_string(m) +
                " on must appear with positive order in L"};
        }
        n_level.push_back(ni);
    }
    {
        ExponentKey expected{Rational{0}, zeros(k)};
        for (int i = m; i <= k; ++i) {
            expected.ell[static_cast<std::size_t>(i) - 1] =
                2 * n_level[static_cast<std::size_t>(i - m)] + 1;
        }
        if (!(r0 == expected)) {
            throw InvariantViolation{"solve_projected_conjugacy_ode: the cutoff must be " +
                                     to_string(expected)};
        }
    }
    if (!V.is_zero()) {
        to_block(V.series, m);
        const auto v_ord = ord_ell(V, m);
        if (!v_ord || *v_ord < n_level[0] + 2) {
            throw InvariantViolation{
                "solve_projected_conjugacy_ode: V's ell-order at level " + std::to_string(m) +
                " must be at least " + std::to_string(n_level[0] + 2)};
        }
        if (!(ord(V.series).key < r0)) {
            throw InvariantViolation{
                "solve_projected_conjugacy_ode: ord(V) must lie below the cutoff"};
        }
    }
    if (V.is_zero() && !C_m) {
        return BlockSeries{m, Transseries::zero(k, V.series.region())};
    }
    // Tower of iterated leading blocks of L, one per level.
    std::vector<Transseries> tower;
    tower.reserve(n_level.size());
    {
        Transseries current = L.series;
        for (int i = m; i <= k; ++i) {
            tower.push_back(current);
            if (i < k) {
                current = leading_block_ell(BlockSeries{i, current}, i).series;
            }
        }
    }
    const Transseries dL = block_derive_series(L.series, m);
    const PartialKey full_bound{r0.alpha, r0.ell};
    auto proj = [&](const Transseries& f) { return project(f, full_bound, ProjectMode::LT); };
    auto t_exact = [&](const Transseries& S) {
        if (S.is_zero()) {
            return Transseries::zero(k, S.region());
        }
        return proj(sub(mul(L.series, block_derive_series(S, m)), mul(S, dL)));
    };
    auto t_inverse = [&](const Transseries& defect_in) {
        if (defect_in.is_zero()) {
            return Transseries::zero(k, defect_in.region());
        }
        const std::size_t levels = n_level.size();
        std::vector<std::vector<Term>> bucket_terms(levels);
        for (const Term& t : defect_in.terms()) {
            if (sgn(t.key.alpha) != 0) {
                throw InvariantViolation{"solve_projected_conjugacy_ode: defect term " +
                                         to_string(t.key) + " carries a power of z"};
            }
            for (int j = 0; j + 1 < m; ++j) {
                if (t.key.ell[static_cast<std::size_t>(j)] != 0) {
                    throw InvariantViolation{"solve_projected_conjugacy_ode: defect term " +
                                             to_string(t.key) +
                                             " involves a scale shallower than level " +
                                             std::to_string(m)};
                }
            }
            int b = -1;
            for (int i = m; i <= k; ++i) {
                const int e = t.key.ell[static_cast<std::size_t>(i) - 1];
                const int cut = 2 * n_level[static_cast<std::size_t>(i - m)] + 1;
                if (e < cut) {
                    b = i;
                    break;
                }
                if (e > cut) {
                    throw InvariantViolation{"solve_projected_conjugacy_ode: defect term " +
                                             to_string(t.key) +
                                             " lies beyond the projection bound"};
                }
            }
            if (b < 0) {
                throw InvariantViolation{"solve_projected_conjugacy_ode: defect term " +
                                         to_string(t.key) +
                                         " lies beyond the projection bound"};
            }
            Term d = t;
            for (int j = m; j < b; ++j) {
                d.key.ell[static_cast<std::size_t>(j) - 1] -=
                    2 * n_level[static_cast<std::size_t>(j - m)] + 1;
            }
            bucket_terms[static_cast<std::size_t>(b - m)].push_back(std::move(d));
        }
        std::vector<Transseries> buckets;
        buckets.reserve(levels);
        for (int i = m; i <= k; ++i) {
            ExponentKey delta{Rational{0}, zeros(k)};
            for (int j = m; j < i; ++j) {
                delta.ell[static_cast<std::size_t>(j) - 1] =
                    -(2 * n_level[static_cast<std::size_t>(j - m)] + 1);
            }
            buckets.push_back(Transseries{k,
                                          std::move(bucket_terms[static_cast<std::size_t>(i - m)]),
                                          defect_in.region().shifted(delta)});
        }
        Transseries Sacc = Transseries::zero(k);
        Transseries handled = Transseries::zero(k);
        for (int i = m; i <= k; ++i) {
            Transseries rhs = buckets[static_cast<std::size_t>(i - m)];
            if (i > m) {
                const Transseries carry = sub(t_exact(Sacc), handled);
                if (!carry.is_zero()) {
                    ExponentKey delta{Rational{0}, zeros(k)};
                    for (int j = m; j < i; ++j) {
                        delta.ell[static_cast<std::size_t>(j) - 1] =
                            -(2 * n_level[static_cast<std::size_t>(j - m)] + 1);
                    }
                    const Transseries divided =
                        mul(carry, Transseries::monomial(delta, Rational{1}));
                    for (const Term& t : divided.terms()) {
                        for (int j = m; j < i; ++j) {
                            if (t.key.ell[static_cast<std::size_t>(j) - 1] != 0) {
                                throw InvariantViolation{
                                    "solve_projected_conjugacy_ode: the defect does not "
                                    "factor through the leading-block prefix"};
                            }
                        }
                    }
                    rhs = sub(rhs, prefix_below(divided, i,
                                                2 * n_level[static_cast<std::size_t>(i - m)] + 1));
                }
            }
            if (!rhs.is_zero()) {
                const Transseries Si =
                    linear_block_ode(tower[static_cast<std::size_t>(i - m)], rhs, i);
                ExponentKey embed{Rational{0}, zeros(k)};
                for (int j = m; j < i; ++j) {
                    embed.ell[static_cast<std::size_t>(j) - 1] =
                        n_level[static_cast<std::size_t>(j - m)];
                }
                Sacc = add(Sacc, mul(Transseries::monomial(std::move(embed), Rational{1}), Si));
            }
            ExponentKey embed_full{Rational{0}, zeros(k)};
            for (int j = m; j < i; ++j) {
                embed_full.ell[static_cast<std::size_t>(j) - 1] =
                    2 * n_level[static_cast<std::size_t>(j - m)] + 1;
            }
            handled = add(handled, mul(Transseries::monomial(std::move(embed_full), Rational{1}),
                                       buckets[static_cast<std::size_t>(i - m)]));
        }
        const Transseries residual = sub(t_exact(Sacc), defect_in);
        if (!residual.is_zero()) {
            throw InvariantViolation{
                "solve_projected_conjugacy_ode: inversion left a defect of order " +
                to_string(ord(residual))};
        }
        return Sacc;
    };
    const Transseries hL = series_value(h, L.series);
    auto s_op = [&](const Transseries& S) {
        Transseries val = V.series;
        if (C_m) {
            val = add(val, C_m(S));
        }
        if (!S.is_zero()) {
            val = sub(val, mul(hL, block_derive_series(S, m)));
            val = add(val, mul(series_value(h, S), dL));
            val = sub(val, mul(S, V.series));
        }
        return proj(val);
    };
    auto step = [&](const Transseries& S) { return t_inverse(s_op(S)); };
    return BlockSeries{m,
                       picard_solve(step, Transseries::zero(k), {}, 0, V.series.region()).first};
}

GradedConjugacySolution solve_graded_conjugacy_system(const BlockSeries& R, const BlockSeries& T,
                                                      const BlockSeries& M,
                                                      const std::vector<GradedTail>& tails)
{
    const int k = R.depth();
    if (T.depth() != k || M.depth() != k) {
        throw DepthMismatch{"solve_graded_conjugacy_system: depths differ"};
    }
    if (R.is_zero()) {
        throw ZeroInput{"solve_graded_conjugacy_system: R must be nonzero"};
    }
    to_block(R.series, 1);
    if (!T.is_zero()) {
        to_block(T.series, 1);
    }
    if (!M.is_zero()) {
        to_block(M.series, 1);
    }
    const ExponentKey lead_key = ord(R.series).key;
    const ExponentKey zero_key{Rational{0}, zeros(k)};
    if (sgn(lead_key.alpha) != 0 || !(lead_key > zero_key)) {
        throw InvariantViolation{
            "solve_graded_conjugacy_system: ord(R) must be a positive logarithmic key"};
    }
    const ExponentKey ones{Rational{0}, std::vector<int>(static_cast<std::size_t>(k), 1)};
    const ExponentKey bound = lead_key + lead_key + ones;
    const Transseries R_minus_T = sub(R.series, T.series);
    if (!R_minus_T.is_zero() && !(ord(R_minus_T).key > bound)) {
        throw InvariantViolation{"solve_graded_conjugacy_system: ord(T - R) must exceed " +
                                 to_string(bound)};
    }
    if (!M.is_zero() && !(ord(M.series).key > bound)) {
        throw InvariantViolation{"solve_graded_conjugacy_system: ord(M) must exceed " +
                                 to_string(bound)};
    }
    const Transseries z = Transseries::identity(k);
    const Transseries z_inv =
        Transseries::monomial(ExponentKey{Rational{-1}, zeros(k)}, Rational{1});
    Transseries S = Transseries::zero(k);
    if (!M.is_zero()) {
        const Transseries one = one_series(k);
        const Transseries one_plus_R = add(one, R.series);
        const Transseries logR = series_value(PowerSeriesSpec::log1p(), R.series);
        const Transseries scale_inv = inverse_mult(mul(one_plus_R, logR));
        const BlockSeries Kp{1, mul(negate(R_minus_T), scale_inv)};
        const BlockSeries Tp{1, negate(mul(block_derive_series(logR, 1), inverse_mult(logR)))};
        const BlockSeries Nb{1, logR};
        const PowerSeriesSpec stream = PowerSeriesSpec::one_plus_x_log1p_minus_x();
        const Transseries zT = mul(z, T.series);
        const Transseries dT = block_derive_series(T.series, 1);
        const Transseries dR = block_derive_series(R.series, 1);
        const Transseries dT_minus_dR = sub(dT, dR);
        const Transseries germ_R = add(z, mul(z, R.series));
        const Transseries affine_R = add(R.series, series_value(stream, R.series));
        auto layer_rhs = [&](const Transseries& Sv) {
            Transseries val = M.series;
            if (!Sv.is_zero()) {
                const Transseries zS = mul(z, Sv);
                const Transseries germ_S = add(z, zS);
                const Transseries affine_S = add(Sv, series_value(stream, Sv));
                const Transseries feed_S =
                    sub(sub(mul(z_inv, sub(compose_parabolic(zS, germ_R), zS)),
                            mul(Sv, R.series)),
                        mul(block_derive_series(Sv, 1), affine_R));
                const Transseries feed_T =
                    sub(sub(mul(z_inv, sub(compose_parabolic(zT, germ_S), zT)),
                            mul(T.series, Sv)),
                        mul(dT, affine_S));
                val = add(val, feed_S);
                val = sub(val, feed_T);
                val = sub(val, mul(affine_S, dT_minus_dR));
            }
            return val;
        };
        auto step = [&](const Transseries& Sv) {
            const BlockSeries Mp{1, negate(mul(layer_rhs(Sv), scale_inv))};
            return solve_nonlinear_block_ode(Nb, Kp, Tp, Mp, stream).series;
        };
        S = picard_solve(step, Transseries::zero(k), {}, 0, M.series.region()).first;
    }
    GradedConjugacySolution out{BlockSeries{1, S}, {}};
    out.tails.reserve(tails.size());
    const Transseries germ_S = add(z, mul(z, S));
    const Transseries T_comp = T.is_zero() ? T.series : compose_parabolic(T.series, germ_S);
    const Transseries dT_comp =
        T.is_zero() ? T.series : compose_parabolic(block_derive_series(T.series, 1), germ_S);
    const Transseries germ_R = add(z, mul(z, R.series));
    for (const GradedTail& tail : tails) {
        if (tail.block.depth() != k) {
            throw DepthMismatch{"solve_graded_conjugacy_system: tail depth mismatch"};
        }
        if (tail.beta == 1) {
            throw InvariantViolation{
                "solve_graded_conjugacy_system: tail powers must differ from 1"};
        }
        if (tail.block.is_zero()) {
            out.tails.push_back(
                GradedTail{tail.beta, Transseries::zero(k, tail.block.region())});
            continue;
        }
        const Transseries binom_R =
            series_value(PowerSeriesSpec::binomial(tail.beta), R.series);
        const Transseries den_inv = inverse_mult(sub(T_comp, binom_R));
        const Transseries z_beta =
            Transseries::monomial(ExponentKey{tail.beta, zeros(k)}, Rational{1});
        const Transseries z_beta_inv =
            Transseries::monomial(ExponentKey{-tail.beta, zeros(k)}, Rational{1});
        auto step = [&](const Transseries& Sb) {
            Transseries val = tail.block;
            if (!Sb.is_zero()) {
                const Transseries zbS = mul(z_beta, Sb);
                const Transseries feed =
                    sub(mul(z_beta_inv, sub(compose_parabolic(zbS, germ_R), zbS)),
                        mul(Sb, binom_R));
                val = add(val, feed);
                val = sub(val, mul(Sb, dT_comp));
            }
            return mul(val, den_inv);
        };
        out.tails.push_back(GradedTail{
            tail.beta,
            picard_solve(step, Transseries::zero(k), {}, 0, tail.block.region()).first});
    }
    return out;
}

} // namespace translog
