#pragma once

#include <cstdint>

namespace proofaudit {

// splitmix64. The exact output sequence is part of the fixture contract:
// anything generated from a seed (synthetic bundles, corpus samples) must be
// reproducible bit-for-bit across platforms and reimplementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Modulo bias is negligible for the pool sizes used
  // here and keeps the sequence trivially portable.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Uniform in [0, 1) with 53 random bits.
  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return real() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace proofaudit
