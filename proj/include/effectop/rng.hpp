#pragma once

#include <cstdint>
#include <cmath>

#include "effectop/common.hpp"

namespace effectop {

/// Counter-based pseudo-random stream (splitmix64 finalizer).  Every draw is a
/// pure function of (seed, counter), so parallel consumers can sample disjoint
/// counter ranges without sharing state and runs are bit-reproducible.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(std::uint64_t counter) const {
    std::uint64_t z = seed_ + (counter + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, 1).
  Real uniform(std::uint64_t counter) const {
    return static_cast<Real>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; draw i consumes counters (2i, 2i+1).
  Real normal(std::uint64_t counter) const {
    const Real u1 = uniform(2 * counter);
    const Real u2 = uniform(2 * counter + 1);
    const Real r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * M_PI * u2);
  }

  Vec normal_vec(std::uint64_t counter, Index n) const {
    Vec x(n);
    for (Index i = 0; i < n; ++i) x[i] = normal(counter * static_cast<std::uint64_t>(n) + i);
    return x;
  }

  /// Derive an independent child stream; tags partition the counter space.
  CounterRng fork(std::uint64_t tag) const {
    return CounterRng(bits(0xa0761d6478bd642fULL ^ tag));
  }

 private:
  std::uint64_t seed_;
};

}  // namespace effectop
