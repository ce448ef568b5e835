#pragma once

/**
 * @file oracle.hpp
 * @brief Reference implementations by exhaustive enumeration.
 *
 * These exist for testing: each recomputes its answer by brute force,
 * sharing no code with the production routines. Costs accumulate in path
 * order and comparisons are exact, so agreement is required bit for bit.
 */

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "atbqc/correction.hpp"
#include "atbqc/errors.hpp"
#include "atbqc/geometry.hpp"

namespace atbqc::oracle {

/// Normalized DTW by depth-first enumeration of every monotone alignment
/// path. Feasible only for short sequences; lengths above 8 are rejected.
inline double brute_force_dtw(std::span<const PixelPoint> a, std::span<const PixelPoint> b) {
    if (a.empty() || b.empty())
        throw EmptyInputError("brute_force_dtw: empty sequence");
    if (a.size() > 8 || b.size() > 8)
        throw InvalidArgumentError("brute_force_dtw: sequence too long to enumerate");

    double best = std::numeric_limits<double>::infinity();
    const auto walk = [&](const auto& self, std::size_t i, std::size_t j, double total,
                          std::size_t len) -> void {
        const double sum = total + distance(a[i], b[j]);
        const std::size_t steps = len + 1;
        if (i + 1 == a.size() && j + 1 == b.size()) {
            const double ratio = sum / static_cast<double>(steps);
            if (ratio < best)
                best = ratio;
            return;
        }
        if (i + 1 < a.size())
            self(self, i + 1, j, sum, steps);
        if (j + 1 < b.size())
            self(self, i, j + 1, sum, steps);
        if (i + 1 < a.size() && j + 1 < b.size())
            self(self, i + 1, j + 1, sum, steps);
    };
    walk(walk, 0, 0, 0.0, 0);
    return best;
}

/// Otsu's threshold with per-candidate sums recomputed from scratch. The
/// between-class variance ordering uses exact integer cross-multiplication;
/// equal scores keep the smallest level.
inline OtsuResult brute_force_otsu(const std::array<std::uint64_t, 256>& histogram) {
    std::uint64_t n = 0;
    std::uint64_t s = 0;
    int occupied = 0;
    int sole = 0;
    for (int k = 0; k < 256; ++k) {
        if (histogram[static_cast<std::size_t>(k)] > 0) {
            ++occupied;
            sole = k;
        }
        n += histogram[static_cast<std::size_t>(k)];
        s += histogram[static_cast<std::size_t>(k)] * static_cast<std::uint64_t>(k);
    }
    if (n == 0)
        throw EmptyInputError("brute_force_otsu: empty histogram");
    if (n > kMaxOtsuTotal)
        throw InvalidArgumentError("brute_force_otsu: histogram total too large");
    if (occupied == 1)
        return {sole, true};

    // Score of split k: A^2 / B with A = S0*N - S*N0, B = N0*(N - N0).
    const auto score = [&](int k, unsigned __int128& a2, std::uint64_t& b) {
        std::uint64_t n0 = 0;
        std::uint64_t s0 = 0;
        for (int i = 0; i <= k; ++i) {
            n0 += histogram[static_cast<std::size_t>(i)];
            s0 += histogram[static_cast<std::size_t>(i)] * static_cast<std::uint64_t>(i);
        }
        if (n0 == 0 || n0 == n) {
            a2 = 0;
            b = 0;
            return;
        }
        const auto lhs = static_cast<__int128>(s0) * static_cast<__int128>(n);
        const auto rhs = static_cast<__int128>(s) * static_cast<__int128>(n0);
        const __int128 diff = lhs > rhs ? lhs - rhs : rhs - lhs;
        a2 = static_cast<unsigned __int128>(diff) * static_cast<unsigned __int128>(diff);
        b = n0 * (n - n0);
    };

    int best_k = 0;
    unsigned __int128 best_a2 = 0;
    std::uint64_t best_b = 0;
    for (int k = 0; k < 256; ++k) {
        unsigned __int128 a2 = 0;
        std::uint64_t b = 0;
        score(k, a2, b);
        if (b == 0)
            continue;
        const bool better = best_b == 0 || a2 * best_b > best_a2 * b;
        if (better) {
            best_k = k;
            best_a2 = a2;
            best_b = b;
        }
    }
    return {best_k, false};
}

} // namespace atbqc::oracle
