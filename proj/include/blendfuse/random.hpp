#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace blendfuse {

// Draws built directly on mt19937_64 output, so seeded runs do not depend on
// the standard library's distribution implementations.

// splitmix64 finalizer, for deriving independent sub-streams.
inline std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits.
inline double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; 1 - u keeps the log argument in (0, 1].
inline double standard_normal(std::mt19937_64& rng)
{
    const double u1 = 1.0 - unit_uniform(rng);
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace blendfuse
