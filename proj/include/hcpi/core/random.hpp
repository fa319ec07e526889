#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace hcpi {

using Rng = std::mt19937_64;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministically derives a child seed from a root seed and a path of
/// stream identifiers, e.g. derive_seed(seed, {kCollect, cycle, episode}).
/// Streams with different paths are statistically independent, so work can
/// be reordered or parallelized without changing results.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(root);
  for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(root, path));
}

/// Stream tags used by the trainer so that training, evaluation and
/// bootstrap draws never share a generator.
enum StreamTag : std::uint64_t {
  kInitStream = 1,
  kCollectStream = 2,
  kTrainStream = 3,
  kBootstrapStream = 4,
  kEvalStream = 5,
  kHybridStream = 6,
};

/// Standard normal draw via Box-Muller on the raw engine output. Unlike
/// std::normal_distribution this is identical across standard libraries.
inline double standard_normal(Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Unbiased integer in [0, n) (Lemire rejection).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

}  // namespace hcpi
