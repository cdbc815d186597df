#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bdrl {

// Deterministic random source used throughout the project.
//
// Reproducibility contract: for a fixed seed the stream of values is
// bit-identical across platforms and standard-library versions.  The raw
// bits come from std::mt19937_64 (whose output is fully specified by the
// C++ standard); every distribution on top of it is implemented here
// rather than via <random> distribution objects, whose algorithms are
// implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  // Next raw 64-bit word from the engine.
  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform();

  // Uniform double in [lo, hi).  Requires lo < hi.
  double uniform(double lo, double hi);

  // Uniform integer in [0, n).  Requires n > 0.  Uses the multiply-shift
  // reduction; the bias is below 2^-53 for any n that fits in 53 bits,
  // which is far beyond anything this project draws.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal deviate via the Box-Muller transform.  Each call
  // consumes exactly two raw words, so streams stay easy to reason about.
  double normal();

  // Normal deviate with the given mean and standard deviation (>= 0).
  double normal(double mean, double stddev);

  // Seed this instance was constructed with.
  std::uint64_t seed() const { return seed_; }

  // Child stream keyed by (seed, tag).  Derivation depends only on the
  // construction seed, never on how much the parent has already drawn, so
  // sub-streams can be re-derived at any point.
  SeededRng derive(std::string_view tag) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace bdrl
