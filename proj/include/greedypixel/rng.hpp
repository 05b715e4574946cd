#pragma once

#include <cstdint>

namespace greedypixel {

// Deterministic 64-bit generator (splitmix64). Every seeded artifact in this
// project draws from this generator so that weight files, random priority
// maps and synthetic samples are reproducible across platforms and across
// reimplementations in other languages. Constants are the published ones.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi).
  double next_in(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, n). Plain modulo; the bias is negligible for the
  // small n used here and keeps cross-language ports trivial.
  std::uint64_t next_below(std::uint64_t n) {
    return next() % n;
  }

  // Derive an independent stream, e.g. per trial or per refresh.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0xA5A5A5A5A5A5A5A5ULL + stream * 0x9E3779B97F4A7C15ULL));
    return g.next();
  }

 private:
  std::uint64_t state_;
};

}  // namespace greedypixel
