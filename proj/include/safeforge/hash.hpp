// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace safeforge {

// FNV-1a, 64 bit. Used for content fingerprints, cache keys and stage
// ledger hashes. Not cryptographic.
inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), seed);
}

std::string hex64(std::uint64_t value);

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG with a single u64 of state. All randomness in the
// toolkit flows through this so that runs are reproducible and resumable:
// consumers derive a fresh stream from (seed, purpose, counters) instead of
// sharing one global stream.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1); never returns an exact endpoint.
    double next_open_double() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [lo, hi], both inclusive. Rejection sampling, no
    // modulo bias.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi);

    // Standard normal via Box-Muller. Stateless between calls (no cached
    // spare), so the stream position fully determines the draw.
    double next_normal();

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

private:
    std::uint64_t state_;
};

// Stream seed derived from a base seed and a label plus counters, e.g.
// derive_seed(42, "train-noise", step, sample).
std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace safeforge
