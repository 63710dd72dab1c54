#pragma once

#include <cstdint>
#include <random>

namespace flexhca {

// Draws are made platform-stable by converting mt19937_64 output to doubles
// directly instead of going through std::uniform_real_distribution, whose
// output is implementation-defined.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// uniform in [lo, hi)
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// splitmix64; used to derive independent sub-seeds from (seed, index) pairs
// so parallel work stays deterministic regardless of scheduling.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace flexhca
