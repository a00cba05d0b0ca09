#pragma once

#include <cstdint>
#include <random>

namespace retas {

/// Uniform on [0, 1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// SplitMix64 finaliser.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of replicate r under master seed m: splitmix64(m ^ splitmix64(r)).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate) {
    return splitmix64(master ^ splitmix64(replicate));
}

} // namespace retas
