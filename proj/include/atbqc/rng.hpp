#pragma once

/**
 * @file rng.hpp
 * @brief Deterministic randomness helpers.
 *
 * Standard-library distributions and std::shuffle leave their engine
 * consumption unspecified, so identical seeds could produce different
 * streams across standard libraries. Everything here maps mt19937_64
 * output to values by a fixed, documented rule instead.
 */

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "atbqc/errors.hpp"

namespace atbqc {

/// FNV-1a, used to derive stable per-entity seeds from string ids.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Unbiased uniform draw from [0, n) by rejection sampling.
inline std::uint64_t bounded_int(std::mt19937_64& eng, std::uint64_t n) {
    if (n == 0)
        throw InvalidArgumentError("bounded_int: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = eng();
    while (x >= limit)
        x = eng();
    return x % n;
}

/// Uniform double in [0, 1) from the top 53 bits of one engine output.
inline double unit_real(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Fisher-Yates shuffle driven by bounded_int.
template <typename T>
void shuffle_in_place(std::vector<T>& values, std::mt19937_64& eng) {
    for (std::size_t i = values.size(); i > 1; --i)
        std::swap(values[i - 1], values[bounded_int(eng, i)]);
}

} // namespace atbqc
