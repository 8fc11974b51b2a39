// SPDX-License-Identifier: MIT
#pragma once

#include "translog/blocks.hpp"
#include "translog/calculus.hpp"
#include "translog/series.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace translog {

/// Record of one fixed-point iteration: how many productive steps it took
/// (steps that changed the iterate), the order of each correction, and
/// whether the loop reached a fixed point.  When `converged` is true the
/// recorded orders are strictly increasing.
struct PicardTrace {
    long iterations = 0;
    std::vector<OrderValue> residual_orders;
    bool converged = false;
};

/// Order bookkeeping for an operator of the shape T + S acting on germs
/// z + az^beta + ..., where T is a homothety scaling orders by `lambda` and
/// S is a contraction scaling them by `mu` (both measured as exponents of
/// the scaling factor).  `rho` is the guaranteed order gain per applied
/// correction at distance `delta` from the identity.
struct ContractionReport {
    Rational lambda_exponent;
    Rational mu_exponent;
    Rational gamma;
    Rational delta;
    Rational rho;

    bool admissible() const { return mu_exponent > lambda_exponent; }
};

/// Order gain of one correction step for a germ z + az^beta + ... against a
/// target of order `gamma`, measured `delta` above the identity, with
/// nonlinearity starting at order `alpha`:
/// min{gamma - 1, 2(beta - 1), delta + alpha - 2}.
Rational contraction_rate(const Rational& gamma, const Rational& beta, const Rational& delta,
                          const Rational& alpha);

using PicardStep = std::function<Transseries(const Transseries&)>;
using ProgressMeasure = std::function<OrderValue(const Transseries&)>;

/// Iterates x <- step(x) from `x0` until the iterate stops changing.  The
/// order of each correction (measured by `progress`, default: full
/// lexicographic order) must strictly increase; otherwise NonContraction is
/// thrown with the recorded orders in the message.  `max_iters` > 0 caps the
/// total number of rounds; 0 derives a cap from the iterate's validity
/// region.  Exceeding the cap throws MaxIterationsExceeded.
///
/// A `pin` region replaces each iterate's window (dropping terms outside)
/// before it is fed back, so the iterate is carried as an exact finite
/// series and window folding inside the step cannot compound across rounds.
/// With a pin, one unchanged round certifies the fixed point; the result
/// keeps the folded window of its final round.
std::pair<Transseries, PicardTrace> picard_solve(const PicardStep& step, Transseries x0,
                                                 const ProgressMeasure& progress = {},
                                                 long max_iters = 0,
                                                 const std::optional<ValidityRegion>& pin = {});

/// Antiderivative with respect to the level-`level` scale: returns J with
/// d J / d ell_level = K / ell_level^2, no constant term.  K must involve
/// only the scales at `level` and deeper (zero power of z and of every
/// shallower scale).  Throws InvariantViolation when the primitive would
/// need one more iterated logarithm than the ambient depth provides (the
/// summand ell_level ell_{level+1} ... ell_k).
Transseries block_antiderivative(const Transseries& K, int level);

/// Solves R1*Q + R2*h(Q) = M for Q in the blocks at `level` and deeper,
/// level by level from the deepest up, linearising h around the part of Q
/// already found.  R1 and R2 must have a constant leading term (leading key
/// zero); otherwise InvariantViolation ("leading-term precondition
/// violated").  R2 = 0 reduces to division by R1.
BlockSeries solve_block_algebraic(const BlockSeries& R1, const BlockSeries& R2,
                                  const PowerSeriesSpec& h, const BlockSeries& M, int level);

/// Solves eps'*u - u'*eps = g for eps, where u = a z^beta ell^n, and fixes
/// the integration constant so that the coefficient of `kill` in eps
/// vanishes.  The coefficient of z^{2 beta - 1} ell^{2n + 1} in g is an
/// obstruction: if it is nonzero (and determined by g's region) the
/// equation has no solution and ResidualObstruction is thrown.
Transseries solve_lie_bracket(const Rational& a, const Rational& beta, const std::vector<int>& n,
                              const Transseries& g, const ExponentKey& kill);

/// Solves the level-`level` linear block equation
///   [P * D_i(S) - S * D_i(P)]_{< cutoff} = K,   i = level,
/// where P has ell_i-order n_i >= 1 and every term of K has ell_i-order
/// below 2 n_i + 1.  `cutoff` must be the key (0_i, 2 n_i + 1) padded with
/// anything deeper; it names the projection bound of the equation.  The
/// returned solution is the canonical one: every term has ell_i-order below
/// n_i (no integration constant).
BlockSeries solve_block_ode_level(const BlockSeries& P, const BlockSeries& K, int level,
                                  const ExponentKey& cutoff);

/// Solves D_1(S) - (D_1(N)/N + K) * S + T * h(S) = M for S with
/// ord(S) > ord(N), by splitting N along its active levels and solving one
/// level at a time from the deepest down, re-centering h at the partial
/// solution.  Preconditions: N != 0; ord(K) > (0, 1, ..., 1);
/// ord(M) > ord(N) + (0, 1, ..., 1); ord(T) >= ord(D_1(N)/N).
BlockSeries solve_nonlinear_block_ode(const BlockSeries& N, const BlockSeries& K,
                                      const BlockSeries& T, const BlockSeries& M,
                                      const PowerSeriesSpec& h);

/// Solves N * D(S) - (n*N + D(N)) * (S + h(S)) + T*S = T for S in the
/// blocks at N's level and deeper, where D differentiates with respect to
/// that level's scale.  Preconditions: N != 0, n >= 1, ord(T) > ord(N),
/// h(0) = h'(0) = 0.
BlockSeries solve_quasilinear_block(const BlockSeries& N, const BlockSeries& T, int n,
                                    const PowerSeriesSpec& h);

using ContractionMap = std::function<Transseries(const Transseries&)>;

/// Solves the projected conjugacy equation at level m = L.level,
///   [(L + h(L)) * D_m(S) - D_m(L) * (S + h(S)) + V*S]_{< r0} = [V + C_m(S)]_{< r0},
/// where ord(L) = (0_m, n_m, ..., n_k) with n_m >= 1 and
/// r0 = (0_m, 2 n_m + 1, ..., 2 n_k + 1).  V must have ell_m-order at least
/// n_m + 2 and order below r0; C_m (optional, may be empty) must raise
/// orders by at least n_m + 2.  The solution is assembled level by level
/// through the tower of leading blocks of L.
BlockSeries solve_projected_conjugacy_ode(const BlockSeries& L, const BlockSeries& V,
                                          const ContractionMap& C_m, const PowerSeriesSpec& h,
                                          const ExponentKey& r0);

/// One power-graded tail equation: the component of a conjugacy defect at
/// z-power `beta`, and its unknown block.
struct GradedTail {
    Rational beta;
    Transseries block;
};

struct GradedConjugacySolution {
    BlockSeries S;
    std::vector<GradedTail> tails;
};

/// Solves the graded conjugacy system between germs id + zT and id + zR
/// whose defect splits as zM + sum_beta z^beta M_beta:
///   - the power-1 layer       (zT)o(id+zS) - zT - [(zS)o(id+zR) - zS] = zM,
///   - for every tail (beta, M_beta)
///     (zT)'o(id+zS) * z^beta S_beta - [(z^beta S_beta)o(id+zR) - z^beta S_beta]
///       = z^beta M_beta.
/// Preconditions: R != 0 with ord(R) = (0, n_1, ..., n_k);
/// ord(M) and ord(T - R) exceed 2 ord(R) + (0, 1, ..., 1).
GradedConjugacySolution solve_graded_conjugacy_system(const BlockSeries& R, const BlockSeries& T,
                                                      const BlockSeries& M,
                                                      const std::vector<GradedTail>& tails);

} // namespace translog
