#include "dmimo/rng.hpp"

#include <cmath>
#include <numbers>

namespace dmimo {

double SplitMix64::next_normal() {
  // Box-Muller; u clamped away from 0 so log stays finite.
  double u = next_double();
  if (u < 0x1.0p-60) u = 0x1.0p-60;
  const double v = next_double();
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(2.0 * std::numbers::pi * v);
}

std::pair<double, double> SplitMix64::next_cnormal() {
  double u = next_double();
  if (u < 0x1.0p-60) u = 0x1.0p-60;
  const double v = next_double();
  const double r = std::sqrt(-std::log(u));  // Var 1/2 per component
  const double phi = 2.0 * std::numbers::pi * v;
  return {r * std::cos(phi), r * std::sin(phi)};
}

namespace {
std::uint64_t mix_step(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  SplitMix64 s(h);
  return s.next_u64();
}
}  // namespace

std::uint64_t mix64(std::uint64_t a) { return mix_step(0x2545f4914f6cdd1dULL, a); }
std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix_step(mix64(a), b);
}
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_step(mix64(a, b), c);
}
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                    std::uint64_t d) {
  return mix_step(mix64(a, b, c), d);
}

std::uint64_t stage_seed(std::uint64_t master_seed, std::string_view stage) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const char ch : stage) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  SplitMix64 s(master_seed ^ h);
  return s.next_u64();
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double acc = 0.0;
    for (const double v : values) acc += v;
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace dmimo
