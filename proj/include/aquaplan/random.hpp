#pragma once

#include <cstdint>
#include <random>

namespace aquaplan {

using Rng = std::mt19937_64;

/// Independent, reproducible stream `stream` derived from a user seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x41u, 0x51u};
    return Rng(seq);
}

/// Uniform draw in [lo, hi]; returns lo when the interval is degenerate.
inline double uniform(Rng& rng, double lo, double hi)
{
    if (!(hi > lo))
        return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace aquaplan
