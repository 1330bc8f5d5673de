#pragma once

#include <cstdint>
#include <random>

namespace crround {

/// Seedable deterministic random stream. All randomized operations in the
/// library take one of these by reference, so every run is reproducible
/// given the seed. Uniform doubles are built from the raw 64-bit output
/// instead of std::uniform_real_distribution, whose mapping is
/// implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53 random bits.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). bound must be >= 1.
  std::uint64_t next_below(std::uint64_t bound) {
    // Classic rejection on the top of the range to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v > limit);
    return v % bound;
  }

  bool bernoulli(double p) { return next_unit() < p; }

  /// Stream for shard `index` of a run seeded with `seed`. Mixing through
  /// splitmix64 keeps shard streams decorrelated even for adjacent seeds.
  static RandomStream derive(std::uint64_t seed, std::uint64_t index) {
    return RandomStream(splitmix64(splitmix64(seed) + index));
  }

  static std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crround
