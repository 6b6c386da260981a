#pragma once
#include <cstdint>
#include <random>

namespace microgrid {

/// splitmix64 finalizer; used to derive independent stream seeds from one
/// master seed without correlated low bits.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for a named sub-stream (tag) of a master seed, optionally indexed
/// (worker id, day index, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
    return mix_seed(mix_seed(master ^ tag) + index);
}

// Stream tags. Arbitrary distinct constants.
namespace seed_tag {
inline constexpr std::uint64_t tcl_init   = 0x7c195ULL;
inline constexpr std::uint64_t households = 0x40a5eULL;
inline constexpr std::uint64_t wind       = 0x91bd3ULL;
inline constexpr std::uint64_t network    = 0x5ee3fULL;
inline constexpr std::uint64_t worker     = 0xa11ceULL;
inline constexpr std::uint64_t replay     = 0xf00d1ULL;
inline constexpr std::uint64_t eval       = 0xe7a1cULL;
} // namespace seed_tag

using Rng = std::mt19937_64;

} // namespace microgrid
