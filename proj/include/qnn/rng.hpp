#pragma once

#include <cstdint>

namespace qnn {

// SplitMix64: the fixed, portable PRNG behind every seeded draw in the
// library (parameter init, data generation, batch sampling). The state
// advance is a single 64-bit add, the output is the usual finalizer, so
// streams are byte-identical across platforms and compilers.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). n must be positive; modulo bias is
  // irrelevant at the n used here (vocab sizes, lengths).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Derives an independent, reproducible stream: mix(seed, k) seeds the
  // k-th sub-stream of a run (data / init / batching).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace qnn
