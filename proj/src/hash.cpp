// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/hash.hpp"

#include <cmath>
#include <numbers>

namespace safeforge {

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::int64_t DetRng::next_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) {
        // Full 64-bit range requested.
        return static_cast<std::int64_t>(next_u64());
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x = next_u64();
    while (x >= limit) {
        x = next_u64();
    }
    return lo + static_cast<std::int64_t>(x % span);
}

double DetRng::next_normal() {
    const double u1 = next_open_double();
    const double u2 = next_open_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = fnv1a64(label);
    h = fnv1a64(&base, sizeof(base), h);
    h = fnv1a64(&a, sizeof(a), h);
    h = fnv1a64(&b, sizeof(b), h);
    return h;
}

}  // namespace safeforge
