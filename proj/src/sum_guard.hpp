// SPDX-License-Identifier: MIT
#pragma once

#include "translog/errors.hpp"
#include "translog/series.hpp"

#include <algorithm>
#include <string>

namespace translog::detail {

/// Budget + escape logic shared by the truncated infinite sums.  A sum stops
/// when the order lower bound of the next summand escapes the lexicographic
/// window bound, or when several successive summands contribute nothing
/// inside the window (per-coordinate bounds can silence a tail long before
/// the lexicographic bound does; the streak length covers mixed-sign
/// coordinate interactions).
struct TailGuard {
    long budget;
    long iters = 0;
    int streak = 0;
    int streak_limit;
    const char* opname;

    TailGuard(const ValidityRegion& region, const char* op, long minimum = 64)
        : budget(std::max(iteration_budget(region), minimum)),
          streak_limit(2 * region.depth() + 2),
          opname(op)
    {
    }

    void tick()
    {
        if (++iters > budget) {
            throw MaxIterationsExceeded{std::string{opname} + ": iteration budget " +
                                        std::to_string(budget) +
                                        " exhausted (bound the validity region to help "
                                        "the sum terminate)"};
        }
    }

    bool silent(const Transseries& contribution, const ValidityRegion& window)
    {
        if (contribution.truncated(window).is_zero()) {
            return ++streak >= streak_limit;
        }
        streak = 0;
        return false;
    }
};

/// True once the order lower bound of the next summand leaves the window.
inline bool escapes(const OrderValue& lower_bound, const ValidityRegion& window)
{
    if (window.G.infinite || lower_bound.infinite) {
        return false;
    }
    return compare(lower_bound, window.G) != std::strong_ordering::less;
}

/// True once the next summand's componentwise support floor has passed the
/// folded cap in a coordinate the floor only climbs.  The product fold
/// already treats every factor as supported at or above its order key, so
/// such a summand can neither store a term inside the window nor disturb
/// what the window certifies; folding its region in would only erode the
/// window for nothing, and the same holds for every later summand.
inline bool tail_above_window(const OrderValue& floor, const ExponentKey& growth,
                              const ValidityRegion& window)
{
    if (floor.infinite) {
        return false;
    }
    for (std::size_t j = 0; j < window.E.size(); ++j) {
        if (growth.ell[j] > 0 && window.E[j] != kUnboundedEll &&
            floor.key.ell[j] > window.E[j]) {
            return true;
        }
    }
    return false;
}

} // namespace translog::detail
