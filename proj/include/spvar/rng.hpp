#ifndef SPVAR_RNG_HPP
#define SPVAR_RNG_HPP

#include <cstdint>
#include <random>

namespace spvar {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of stream `index` under a master seed: mix64(mix64(master) ^ index).
constexpr std::uint64_t sub_seed(std::uint64_t master, std::uint64_t index) { return mix64(mix64(master) ^ index); }

/// Uniform integer on [lo, hi].
inline long long uniform_int(Rng& rng, long long lo, long long hi) {
  return std::uniform_int_distribution<long long>(lo, hi)(rng);
}

}  // namespace spvar

#endif  // SPVAR_RNG_HPP
