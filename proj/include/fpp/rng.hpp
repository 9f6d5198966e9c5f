#pragma once

#include "fpp/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace fpp {

// splitmix64 finalizer; used to derive independent, stable stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base) ^ (index * 0xd1342543de82ef95ULL + 1));
}

// mt19937_64's output sequence is fixed by the standard; the conversions
// below are written out so results do not depend on the library's
// distribution implementations.
using Engine = std::mt19937_64;

/// Counter-based stream for cheap per-cell generators.
struct SplitMix64 {
  using result_type = std::uint64_t;
  std::uint64_t state = 0;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }
  result_type operator()() {
    state += 0x9e3779b97f4a7c15ULL;
    return mix64(state);
  }
};

template <class G>
double uniform01(G& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

template <class G>
double uniform(G& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

/// Poisson variate by sequential inversion. Large means are split into
/// chunks so exp(-mean) never underflows.
template <class G>
std::uint64_t poisson_inversion(G& eng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw InvalidArgument("poisson: bad mean");
  constexpr double kChunk = 200.0;
  std::uint64_t total = 0;
  double left = mean;
  while (left > 0.0) {
    const double m = std::min(left, kChunk);
    left -= m;
    const double u = uniform01(eng);
    double p = std::exp(-m);
    double cdf = p;
    std::uint64_t k = 0;
    const double cap = m + 40.0 * std::sqrt(m) + 60.0;
    while (u > cdf && static_cast<double>(k) < cap) {
      ++k;
      p *= m / static_cast<double>(k);
      cdf += p;
    }
    total += k;
  }
  return total;
}

}  // namespace fpp
