#pragma once

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <random>
#include <span>
#include <utility>

namespace csocnn {

// All randomness in the library goes through this engine and the helpers
// below. The std distributions are implementation-defined, so they are
// avoided to keep seeded runs identical across standard libraries.
using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to fan a single seed out to independent streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) noexcept {
  return mix_seed(mix_seed(seed) ^ a);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b) noexcept {
  return derive_seed(derive_seed(seed, a), b);
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  // Modulo bias is below n / 2^64.
  return static_cast<std::size_t>(rng() % n);
}

// Box-Muller, one value per call.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

}  // namespace csocnn
