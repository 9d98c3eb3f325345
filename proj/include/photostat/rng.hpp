#pragma once

// SplitMix64 with an explicit substream derivation rule. Every work item
// (Monte-Carlo trial, GA child) draws from a stream keyed by its own index,
// so any partitioning of work across threads reproduces identical results.

#include <cstdint>
#include <cmath>

namespace photostat {

inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct SplitMix64 {
  std::uint64_t state = 0;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; first uniform drawn on (0, 1].
  double next_gaussian() {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }
};

/// Stream for work item `key`: state = mix64(mix64(seed) ^ mix64(key + c)).
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t key) {
  return SplitMix64{mix64(mix64(seed) ^ mix64(key + 0x9E3779B97F4A7C15ull))};
}

/// Two-level stream, e.g. (generation, child).
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t key1, std::uint64_t key2) {
  return SplitMix64{mix64(substream(seed, key1).state ^ mix64(key2 + 0xD1B54A32D192ED03ull))};
}

}  // namespace photostat
