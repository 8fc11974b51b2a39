// SPDX-License-Identifier: MIT
#pragma once

#include "translog/series.hpp"

#include <vector>

namespace translog {

/// A parabolic germ is a transseries of the form z + (terms above (1; 0,...)).
using ParabolicGerm = Transseries;

/// True when f = z + higher-order terms.
bool is_parabolic(const Transseries& f);

/// Derivative d/dz with the iterated-logarithm chain rule
///   d/dz (z^a l1^{n1}...lk^{nk})
///     = z^{a-1} (a l^n + sum_m n_m l1...l_{m-1} l_m^{n_m+1} ... ),
/// extended linearly.  Output window: input window shifted by (-1; 0,...).
Transseries differentiate(const Transseries& f);

/// Level-m derivation l_m^2 d/dl_m acting through the deeper tower:
///   D_m(key) = sum_{j>=m} n_j * (key + 1 at coordinates m..j).
/// Raises the l_m order by at least one; window unchanged.
Transseries block_derive_series(const Transseries& f, int level);

/// Antiderivative of one monomial, truncated so that
/// differentiate(result) = monomial holds inside target_region.
/// The key (-1; 1,...,1) promotes the depth by one: its antiderivative is
/// -1/l_{k+1}.  Keys with alpha = -1 otherwise reduce by the substitution
/// w = l1; all other keys integrate by parts with a cascade of corrections.
Transseries integrate_monomial(const ExponentKey& key, const ValidityRegion& target_region);

/// Monomial-by-monomial antiderivative of f.  Output depth is k+1 exactly
/// when the promoting key (-1; 1,...,1) occurs in the support.
Transseries integrate(const Transseries& f);

/// Formal power series h with h(0) = 0 to be evaluated on a series of
/// positive order.  The built-in kinds start as follows:
///   Log1p:                x - x^2/2 + x^3/3 - ...
///   OnePlusXLog1pMinusX:  (1+x)log(1+x) - x = x^2/2 - x^3/6 + ...
///   Binomial(beta):       (1+x)^beta - 1 = beta x + C(beta,2) x^2 + ...
///   Exp:                  e^x - 1 = x + x^2/2 + ...
/// Custom carries explicit series coefficients c_start, c_start+1, ...
struct PowerSeriesSpec {
    enum class Kind { Log1p, OnePlusXLog1pMinusX, Binomial, Exp, Custom };

    Kind kind = Kind::Log1p;
    Rational beta;                         // Binomial only
    int custom_start = 2;                  // degree of custom_coeffs.front()
    std::vector<Transseries> custom_coeffs; // Custom only

    static PowerSeriesSpec log1p() { return {Kind::Log1p, {}, 2, {}}; }
    static PowerSeriesSpec one_plus_x_log1p_minus_x()
    {
        return {Kind::OnePlusXLog1pMinusX, {}, 2, {}};
    }
    static PowerSeriesSpec binomial(Rational b)
    {
        return {Kind::Binomial, std::move(b), 2, {}};
    }
    static PowerSeriesSpec exp() { return {Kind::Exp, {}, 2, {}}; }
    static PowerSeriesSpec custom(int start, std::vector<Transseries> coeffs)
    {
        return {Kind::Custom, {}, start, std::move(coeffs)};
    }

    /// First degree with a (possibly) nonzero coefficient.
    int first_degree() const;

    /// Scalar coefficient c_i of a built-in kind.
    Rational scalar_coefficient(unsigned long i) const;
};

/// Sum_i c_i Q^i truncated to the propagated window.
/// Requires ord(Q) > (0; 0,...,0) lexicographically.
Transseries apply_series(const PowerSeriesSpec& h, const Transseries& Q);

/// Taylor composition f o g = sum_i f^(i) (g-id)^i / i! for parabolic g.
Transseries compose_parabolic(const Transseries& f, const ParabolicGerm& g);

/// Compositional inverse of a parabolic germ, by the fixed-point iteration
/// psi <- id - (phi - id) o psi.
ParabolicGerm invert_parabolic(const ParabolicGerm& phi);

/// Formal vector field F(z) d/dz whose time-one map is parabolic.
struct VectorField {
    Transseries F;

    int depth() const { return F.depth(); }
};

/// Time-one map exp(X).id = sum_n X^n.id / n! with X.g = F g'.
/// Requires ord(F) > (1; 0,...,0).
ParabolicGerm flow_time_one(const VectorField& X);

} // namespace translog
