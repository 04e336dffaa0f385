#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace ocrpipe {

/// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Seeded random source. Distributions are computed from raw engine bits,
/// so streams are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Stream for one element of a larger job: depends only on (seed, index),
  /// never on scheduling.
  static Rng substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Standard normal (Box-Muller; the spare value is cached).
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ocrpipe
