#include "bdrl/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bdrl {
namespace {

// 64-bit FNV-1a, used to turn derivation tags into seed material.
std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

// splitmix64 finalizer; scrambles correlated seeds into independent ones.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform() {
  // Top 53 bits scaled by 2^-53: the standard fixed-point mapping.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("SeededRng::uniform: requires lo < hi");
  }
  return lo + (hi - lo) * uniform();
}

std::uint64_t SeededRng::uniform_int(std::uint64_t n) {
  if (n == 0) {
    throw std::invalid_argument("SeededRng::uniform_int: requires n > 0");
  }
  const auto wide = static_cast<unsigned __int128>(next_u64());
  return static_cast<std::uint64_t>((wide * n) >> 64);
}

double SeededRng::normal() {
  // Box-Muller.  u1 is mapped into (0, 1] so the log never sees zero.
  const double u1 =
      static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double SeededRng::normal(double mean, double stddev) {
  if (stddev < 0.0) {
    throw std::invalid_argument("SeededRng::normal: stddev must be >= 0");
  }
  if (stddev == 0.0) {
    return mean;  // degenerate distribution; consumes no randomness
  }
  return mean + stddev * normal();
}

SeededRng SeededRng::derive(std::string_view tag) const {
  return SeededRng(splitmix64(seed_ ^ fnv1a64(tag)));
}

}  // namespace bdrl
