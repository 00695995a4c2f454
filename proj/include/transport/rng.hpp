#pragma once

// Deterministic random draws.
//
// Everything is built on std::mt19937_64, whose output stream is fully
// specified by the standard, plus hand-rolled distribution transforms, so a
// given seed produces identical numbers on every platform and compiler.
// Parallel consumers take substream_seed(master, k): substream k depends only
// on (master, k), never on scheduling.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace transport::rng {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of substream `k` of a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t k) {
  return splitmix64(splitmix64(master) ^ splitmix64(k + 1));
}

/// Uniform double in [0, 1), 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Engine& eng, double p) { return uniform01(eng) < p; }

/// Standard normal via Box-Muller; consumes exactly two engine outputs.
inline double normal01(Engine& eng) {
  const double u1 = uniform01(eng);
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Beta(1/2, 1/2) (arcsine law) by inverse CDF; consumes one engine output.
inline double beta_half_half(Engine& eng) {
  const double s = std::sin(0.5 * std::numbers::pi * uniform01(eng));
  return s * s;
}

/// Unbiased uniform integer in [0, n).
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t v = eng();
    if (v >= threshold) return v % n;
  }
}

}  // namespace transport::rng
