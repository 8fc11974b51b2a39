// SPDX-License-Identifier: MIT
#include "translog/blocks.hpp"

#include "support/frozen.hpp"
#include "support/random_series.hpp"

#include "doctest.h"

#include <random>

using namespace translog;
using namespace translog::testing;

namespace {

Transseries logs(int depth, std::vector<int> ell, const char* coeff = "1")
{
    return Transseries::monomial(ExponentKey{Rational{0}, std::move(ell)},
                                 parse_rational(coeff));
}

/// Random block at the given level: log-only keys, zero below the level,
/// strictly positive at the first active level.
BlockSeries rand_block(std::mt19937& rng, int depth, int level, int nterms,
                       const ValidityRegion& region)
{
    std::vector<Term> terms;
    for (int i = 0; i < nterms; ++i) {
        std::vector<int> ell(static_cast<std::size_t>(depth), 0);
        int first = rand_int(rng, level, depth);
        ell[static_cast<std::size_t>(first - 1)] = rand_int(rng, 1, 3);
        for (int j = first; j < depth; ++j) {
            ell[static_cast<std::size_t>(j)] = rand_int(rng, -2, 3);
        }
        terms.push_back(
            Term{ExponentKey{Rational{0}, std::move(ell)}, rand_rational(rng)});
    }
    return to_block(Transseries{depth, std::move(terms), region}, level);
}

} // namespace

TEST_SUITE("block views")
{
    TEST_CASE("accepts structural block elements")
    {
        // l2 + l2^3 l3^{-1} is a valid level-2 block
        const Transseries f = add(logs(3, {0, 1, 0}), logs(3, {0, 3, -1}));
        const BlockSeries K = to_block(f, 2);
        CHECK(K.level == 2);
        CHECK(K.series.same_terms(f));
    }

    TEST_CASE("rejects z-exponents and low-level activity")
    {
        const Transseries zl2 =
            Transseries::monomial(ExponentKey{Rational{1}, {0, 1}}, Rational{1});
        CHECK_THROWS_AS(to_block(zl2, 2), InvariantViolation);

        const Transseries l1l2 = logs(2, {1, 1});
        CHECK_THROWS_AS(to_block(l1l2, 2), InvariantViolation);
        CHECK_NOTHROW(to_block(l1l2, 1));

        CHECK_THROWS_AS(to_block(l1l2, 0), DepthMismatch);
        CHECK_THROWS_AS(to_block(l1l2, 3), DepthMismatch);
    }

    TEST_CASE("blocks of deeper levels remain blocks of shallower ones")
    {
        std::mt19937 rng(81001);
        const ValidityRegion box = ValidityRegion::box(Rational{2}, {6, 6, 6});
        for (int rep = 0; rep < 10; ++rep) {
            const BlockSeries K = rand_block(rng, 3, 2 + rep % 2, 3, box);
            CHECK_NOTHROW(to_block(K.series, 1));
            if (K.level == 3) {
                CHECK_NOTHROW(to_block(K.series, 2));
            }
        }
    }
}

TEST_SUITE("level decomposition")
{
    TEST_CASE("textbook split across three levels")
    {
        // 5 l2 l3^4 + l2^3 l3^{-1} + l1^2 l2 at level 1
        const Transseries f = add(add(logs(3, {0, 1, 4}, "5"), logs(3, {0, 3, -1})),
                                  logs(3, {2, 1, 0}));
        const LevelDecomposition D = decompose_levels(to_block(f, 1));
        REQUIRE(D.components.size() == 3);
        CHECK(D.components[0].series.same_terms(logs(3, {2, 1, 0})));
        CHECK(D.components[1].series.same_terms(
            add(logs(3, {0, 1, 4}, "5"), logs(3, {0, 3, -1}))));
        CHECK(D.components[2].series.is_zero());
        CHECK(D.components[0].level == 1);
        CHECK(D.components[1].level == 2);
        CHECK(D.components[2].level == 3);
    }

    TEST_CASE("zero splits into zeros")
    {
        const LevelDecomposition D = decompose_levels(to_block(Transseries::zero(2), 1));
        REQUIRE(D.components.size() == 2);
        CHECK(D.components[0].series.is_zero());
        CHECK(D.components[1].series.is_zero());
    }

    TEST_CASE("deep single scale lands in the last slot")
    {
        const LevelDecomposition D = decompose_levels(to_block(logs(3, {0, 0, 1}), 1));
        REQUIRE(D.components.size() == 3);
        CHECK(D.components[0].series.is_zero());
        CHECK(D.components[1].series.is_zero());
        CHECK(D.components[2].series.same_terms(logs(3, {0, 0, 1})));
    }

    TEST_CASE("rejects terms without a positive level start")
    {
        CHECK_THROWS_AS(decompose_levels(to_block(Transseries::constant(2, Rational{3}), 1)),
                        InvariantViolation);
        CHECK_THROWS_AS(decompose_levels(to_block(logs(2, {-1, 2}), 1)),
                        InvariantViolation);
    }

    TEST_CASE("components sum back to the input")
    {
        std::mt19937 rng(82001);
        const ValidityRegion box = ValidityRegion::box(Rational{2}, {6, 6, 6});
        for (int rep = 0; rep < 20; ++rep) {
            const int level = 1 + rep % 3;
            const BlockSeries K = rand_block(rng, 3, level, 4, box);
            const LevelDecomposition D = decompose_levels(K);
            REQUIRE(static_cast<int>(D.components.size()) == 3 - level + 1);
            Transseries total = Transseries::zero(3, box);
            for (const BlockSeries& S : D.components) {
                total = add(total, S.series);
                // each component passes its own level constraint
                CHECK_NOTHROW(to_block(S.series, S.level));
                if (!S.series.is_zero()) {
                    const auto n = ord_ell(S, S.level);
                    REQUIRE(n.has_value());
                    CHECK(*n >= 1);
                }
            }
            CHECK_MESSAGE(total.same_terms(K.series), diff_series(total, K.series));
        }
    }
}

TEST_SUITE("block orders")
{
    TEST_CASE("minimal scale exponents")
    {
        const BlockSeries K = to_block(add(logs(2, {0, 3}), logs(2, {0, 5})), 2);
        const auto n = ord_ell(K, 2);
        REQUIRE(n.has_value());
        CHECK(*n == 3);
        CHECK(!ord_ell(to_block(Transseries::zero(2), 2), 2).has_value());
    }

    TEST_CASE("leading block extraction")
    {
        // leading l2-block of l2^3 l3^{-1} + l2^4 is l3^{-1}
        const BlockSeries K = to_block(add(logs(3, {0, 3, -1}), logs(3, {0, 4, 0})), 2);
        const BlockSeries L = leading_block_ell(K, 2);
        CHECK(L.level == 3);
        CHECK_MESSAGE(L.series.same_terms(logs(3, {0, 0, -1})),
                      diff_series(L.series, logs(3, {0, 0, -1})));

        CHECK_THROWS_AS(leading_block_ell(to_block(Transseries::zero(2), 1), 1), ZeroInput);
    }

    TEST_CASE("leading block times the scale power recovers the lead")
    {
        std::mt19937 rng(83001);
        const ValidityRegion box = ValidityRegion::box(Rational{2}, {8, 8});
        for (int rep = 0; rep < 15; ++rep) {
            const BlockSeries K = rand_block(rng, 2, 1, 3, box);
            const auto n0 = ord_ell(K, 1);
            REQUIRE(n0.has_value());
            const BlockSeries L = leading_block_ell(K, 1);
            std::vector<int> ell{*n0, 0};
            const Transseries lead =
                mul(Transseries::monomial(ExponentKey{Rational{0}, std::move(ell)},
                                          Rational{1}),
                    L.series);
            for (const Term& t : lead.terms()) {
                CHECK(coefficient(K.series, t.key) == t.coeff);
            }
        }
    }
}

TEST_SUITE("block embedding")
{
    TEST_CASE("monomial prefixes")
    {
        // embed(l2^2, z-power 1, [1]) = z l1 l2^2
        const BlockSeries K = to_block(logs(2, {0, 2}), 2);
        const Transseries e = embed_block(K, Rational{1}, {1});
        CHECK(e.same_terms(
            Transseries::monomial(ExponentKey{Rational{1}, {1, 2}}, Rational{1})));

        // embed(K, 0, []) = K at level 1
        const BlockSeries K1 = to_block(logs(2, {1, 0}), 1);
        CHECK(embed_block(K1, Rational{0}, {}).same_terms(K1.series));

        // embed(l3, 2, [1,1]) = z^2 l1 l2 l3
        const BlockSeries K3 = to_block(logs(3, {0, 0, 1}), 3);
        CHECK(embed_block(K3, Rational{2}, {1, 1})
                  .same_terms(Transseries::monomial(ExponentKey{Rational{2}, {1, 1, 1}},
                                                    Rational{1})));

        CHECK_THROWS_AS(embed_block(K3, Rational{1}, {1}), DepthMismatch);
    }
}

TEST_SUITE("block derivations")
{
    TEST_CASE("derivations push deep blocks into positive shallow blocks")
    {
        std::mt19937 rng(84001);
        const ValidityRegion box = ValidityRegion::box(Rational{2}, {8, 8, 8});
        for (int rep = 0; rep < 20; ++rep) {
            const int m = 1 + rep % 2;
            const BlockSeries K = rand_block(rng, 3, std::min(3, m + 1), 3, box);
            const BlockSeries D = block_derive(m, K);
            CHECK(D.level == m);
            if (!D.is_zero()) {
                const auto n = ord_ell(D, m);
                REQUIRE(n.has_value());
                CHECK(*n >= 1);
                CHECK_NOTHROW(to_block(D.series, m));
            }
        }
    }

    TEST_CASE("derivation of a pure deep scale")
    {
        // D1(l2) = l1 l2^2 as a level-1 block
        const BlockSeries K = to_block(logs(2, {0, 1}), 2);
        const BlockSeries D = block_derive(1, K);
        CHECK(D.level == 1);
        CHECK(D.series.same_terms(logs(2, {1, 2})));
    }
}
