#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace dmimo {

// Counter-style PRNG built on splitmix64. Streams are keyed by mixing an
// arbitrary tuple of 64-bit values into a state word, so two streams with
// different keys are independent and the draw order within a stream is
// platform-independent (no std::*_distribution involved anywhere).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_double(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via Box-Muller; one value per call, the sibling of the
  // pair is discarded to keep the stream position easy to reason about.
  double next_normal();

  // Pair of independent N(0, 1/2) values, i.e. one CN(0,1) sample.
  std::pair<double, double> next_cnormal();

 private:
  std::uint64_t state_;
};

// Order-sensitive 64-bit mixer for building stream keys out of small tuples
// such as (seed, trial, user, bs).
std::uint64_t mix64(std::uint64_t a);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                    std::uint64_t d);

// Per-stage sub-seed used by the pipeline: splitmix64(master ^ fnv1a(stage)).
std::uint64_t stage_seed(std::uint64_t master_seed, std::string_view stage);

// Deterministic pairwise (cascade) summation; the result depends only on the
// element order, not on accumulation chunking.
double pairwise_sum(std::span<const double> values);

}  // namespace dmimo
