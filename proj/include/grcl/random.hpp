#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace grcl {

using Rng = std::mt19937_64;

// Named streams carved out of the single root seed of a run.
enum class SeedStream : std::uint64_t {
  data = 1,
  init = 2,
  batches = 3,
  negatives = 4,
  clustering = 5,
};

/// SplitMix64 finalizer over (root, stream); distinct streams never share a seed.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t root, SeedStream stream, std::uint64_t salt = 0) {
  return Rng(derive_seed(derive_seed(root, static_cast<std::uint64_t>(stream)), salt));
}

/// Uniform double in [0, 1) from 53 random bits; stable across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n); n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

/// Box-Muller; consumes exactly two draws.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace grcl
