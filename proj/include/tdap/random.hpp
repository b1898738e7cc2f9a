#pragma once

#include <cstdint>
#include <random>

namespace tdap {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of an independent stream keyed by (seed, a, b). Replicate b of
/// study replication a never shares a stream with any other pair.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
    return mix64(mix64(mix64(seed) ^ (a + 0x632BE59BD9B4E019ULL)) ^
                 (b + 0x8CB92BA72F3D8DD7ULL));
}

inline Engine make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return Engine(stream_seed(seed, a, b));
}

} // namespace tdap
