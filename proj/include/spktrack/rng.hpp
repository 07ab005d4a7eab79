#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spktrack {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Per-stage seed: every random stream in the toolkit is keyed by
// (parent seed, index, stage name), so two sweeps over the same master seed
// see the same scenes, the same trackers and the same enrollment pools.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index, std::string_view stage) {
    return splitmix64(splitmix64(parent ^ fnv1a(stage)) + index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace spktrack
