#pragma once

#include <cstdint>
#include <random>

namespace mixlaw::detail {

// Independent, reproducible stream for (seed, stream) pairs.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x6d69786cU};
    return std::mt19937_64(seq);
}

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mixlaw::detail
