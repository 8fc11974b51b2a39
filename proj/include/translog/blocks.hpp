// SPDX-License-Identifier: MIT
#pragma once

#include "translog/calculus.hpp"

#include <optional>
#include <vector>

namespace translog {

/// A series confined to the log scales at and above one level: every key has
/// z-exponent zero and vanishing exponents below the level.  Blocks share the
/// plain series representation, so all ring arithmetic applies unchanged; the
/// level only selects which scale the block metrics and derivations act on.
struct BlockSeries {
    int level = 1;      ///< 1-based scale index m
    Transseries series; ///< keys (0; 0,...,0, n_m, ..., n_k)

    int depth() const { return series.depth(); }
    bool is_zero() const { return series.is_zero(); }
};

/// Validating constructor for block views.
/// Throws DepthMismatch for an out-of-range level and InvariantViolation when
/// a key carries a z-exponent or a log exponent below the level.
BlockSeries to_block(const Transseries& f, int level);

/// Split of a block into per-level components S_m + ... + S_k where S_i
/// collects the terms whose lowest nonzero log level is exactly i.
struct LevelDecomposition {
    int level = 1;                       ///< starting level m
    std::vector<BlockSeries> components; ///< S_m, ..., S_k
};

/// Decompose a lexicographically positive block by lowest active log level.
/// Throws InvariantViolation when a nonzero term has no positive level start
/// (a constant, or a leading negative exponent).
LevelDecomposition decompose_levels(const BlockSeries& f);

/// Minimal stored exponent of the given log scale; empty for the zero block.
std::optional<int> ord_ell(const BlockSeries& f, int level);

/// Coefficient block of the minimal power of the given log scale, i.e. the
/// terms at that exponent divided by the scale monomial.  Throws ZeroInput on
/// the zero block.
BlockSeries leading_block_ell(const BlockSeries& f, int level);

/// Multiply a block back into the full algebra: K -> z^p l1^{p1} ... l_{m-1}^{p_{m-1}} K.
/// The prefix must have length level - 1.
Transseries embed_block(const BlockSeries& K, const Rational& z_power,
                        const std::vector<int>& ell_prefix);

/// The level-m log derivation acting on a block; lands in blocks whose lowest
/// scale is min(level, K.level) with a strictly positive exponent there.
BlockSeries block_derive(int level, const BlockSeries& K);

} // namespace translog
