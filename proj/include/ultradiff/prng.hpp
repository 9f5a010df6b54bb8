#pragma once

#include <cmath>
#include <cstdint>

namespace ultradiff {

// Reproducibility contract: every random draw in this library comes from
// splitmix64 (Steele, Lea, Flood 2014; public domain reference constants).
// Random trees and simulated paths are therefore bit-identical across
// platforms for a given 64-bit seed.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic stream of uniform draws derived from a seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform in [0, 1) from the top 53 bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in {0, .., n-1} by rejection; exact for any n.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~0ULL) / n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  /// Exponential holding time with the given rate; uses 1-u so log never sees 0.
  double next_exponential(double rate) { return -std::log1p(-next_double()) / rate; }

 private:
  std::uint64_t state_;
};

/// Independent per-path stream: state seeded by a fixed mix of (seed, index),
/// so paths may be sampled in any order or in parallel with identical results.
inline SplitMix64 path_stream(std::uint64_t seed, std::uint64_t path_index) {
  std::uint64_t s = seed;
  const std::uint64_t base = splitmix64_next(s);
  return SplitMix64(base + path_index * 0x9E3779B97F4A7C15ULL);
}

}  // namespace ultradiff
