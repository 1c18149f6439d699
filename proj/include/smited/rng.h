//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_RNG_H_
#define SMITED_RNG_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace smited {

// SplitMix64: a 64-bit counter advanced by the golden-ratio increment and
// passed through a fixed finalizer. Bit-identical on every platform, unlike
// the std:: distributions, so every draw below is derived by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : counter_(seed) { }

  std::uint64_t next_u64() {
    std::uint64_t z = (counter_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::size_t below(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; the second variate is discarded to keep the stream simple.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * std::numbers::pi * u2);
  }

  // Independent stream for a sub-task, derived deterministically.
  Rng fork(std::uint64_t stream) {
    return Rng(next_u64() ^ (stream * 0xD1B54A32D192ED03ULL));
  }

 private:
  std::uint64_t counter_;
};

}  // namespace smited

#endif  // SMITED_RNG_H_
