#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ppac {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; mixes a parent seed with a stream tag so that
/// every stochastic component draws from its own reproducible stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [lo, hi], inclusive.
inline int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

/// Standard normal via Box-Muller.
inline double standard_normal(Rng& rng) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

} // namespace ppac
