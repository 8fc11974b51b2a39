// SPDX-License-Identifier: MIT
#include "translog/blocks.hpp"

#include <algorithm>

namespace translog {

BlockSeries to_block(const Transseries& f, int level)
{
    const int k = f.depth();
    if (level < 1 || level > k) {
        throw DepthMismatch{"to_block: level " + std::to_string(level) + " outside 1.." +
                            std::to_string(k)};
    }
    for (const Term& t : f.terms()) {
        if (sgn(t.key.alpha) != 0) {
            throw InvariantViolation{"to_block: key " + to_string(t.key) +
                                     " carries a z-exponent"};
        }
        for (int i = 0; i + 1 < level; ++i) {
            if (t.key.ell[static_cast<std::size_t>(i)] != 0) {
                throw InvariantViolation{"to_block: key " + to_string(t.key) +
                                         " is active below level " + std::to_string(level)};
            }
        }
    }
    return BlockSeries{level, f};
}

LevelDecomposition decompose_levels(const BlockSeries& f)
{
    const int k = f.depth();
    const int m = f.level;
    LevelDecomposition out;
    out.level = m;
    std::vector<std::vector<Term>> buckets(static_cast<std::size_t>(k - m + 1));
    for (const Term& t : f.series.terms()) {
        int start = 0; // first nonzero log level, 1-based
        for (int i = 0; i < k; ++i) {
            if (t.key.ell[static_cast<std::size_t>(i)] != 0) {
                start = i + 1;
                break;
            }
        }
        if (start == 0 || t.key.ell[static_cast<std::size_t>(start - 1)] < 0) {
            throw InvariantViolation{"decompose_levels: term " + to_string(t.key) +
                                     " has no positive level start"};
        }
        buckets[static_cast<std::size_t>(start - m)].push_back(t);
    }
    for (int i = m; i <= k; ++i) {
        out.components.push_back(BlockSeries{
            i, Transseries{k, std::move(buckets[static_cast<std::size_t>(i - m)]),
                           f.series.region()}});
    }
    return out;
}

std::optional<int> ord_ell(const BlockSeries& f, int level)
{
    const int k = f.depth();
    if (level < 1 || level > k) {
        throw DepthMismatch{"ord_ell: level " + std::to_string(level) + " outside 1.." +
                            std::to_string(k)};
    }
    std::optional<int> best;
    for (const Term& t : f.series.terms()) {
        const int e = t.key.ell[static_cast<std::size_t>(level - 1)];
        if (!best || e < *best) {
            best = e;
        }
    }
    return best;
}

BlockSeries leading_block_ell(const BlockSeries& f, int level)
{
    const std::optional<int> n0 = ord_ell(f, level);
    if (!n0) {
        throw ZeroInput{"leading_block_ell: zero block has no leading block"};
    }
    const int k = f.depth();
    std::vector<Term> terms;
    for (const Term& t : f.series.terms()) {
        if (t.key.ell[static_cast<std::size_t>(level - 1)] != *n0) {
            continue;
        }
        ExponentKey key = t.key;
        key.ell[static_cast<std::size_t>(level - 1)] = 0;
        terms.push_back(Term{std::move(key), t.coeff});
    }
    ExponentKey shift{Rational{0}, std::vector<int>(static_cast<std::size_t>(k), 0)};
    shift.ell[static_cast<std::size_t>(level - 1)] = -*n0;
    const int out_level = std::min(level + 1, k);
    return BlockSeries{out_level,
                       Transseries{k, std::move(terms), f.series.region().shifted(shift)}};
}

Transseries embed_block(const BlockSeries& K, const Rational& z_power,
                        const std::vector<int>& ell_prefix)
{
    if (static_cast<int>(ell_prefix.size()) != K.level - 1) {
        throw DepthMismatch{"embed_block: prefix length " +
                            std::to_string(ell_prefix.size()) + " but level " +
                            std::to_string(K.level)};
    }
    std::vector<int> ell(static_cast<std::size_t>(K.depth()), 0);
    std::copy(ell_prefix.begin(), ell_prefix.end(), ell.begin());
    return mul(Transseries::monomial(ExponentKey{z_power, std::move(ell)}, Rational{1}),
               K.series);
}

BlockSeries block_derive(int level, const BlockSeries& K)
{
    return BlockSeries{std::min(level, K.level), block_derive_series(K.series, level)};
}

} // namespace translog
