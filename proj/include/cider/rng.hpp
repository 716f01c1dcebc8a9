// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace cider {

/// xorshift64* (Marsaglia shifts 12/25/27, multiplier 0x2545F4914F6CDD1D).
/// Satisfies UniformRandomBitGenerator.
class Xorshift64Star {
 public:
  using result_type = std::uint64_t;

  explicit Xorshift64Star(std::uint64_t seed) : state_(seed != 0 ? seed : kZeroSeedFallback) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one draw per call, no cached pair).
  double normal();
  /// Poisson draw; inversion for small means, rounded normal approximation above 1000.
  std::uint64_t poisson(double mean);

 private:
  static constexpr std::uint64_t kZeroSeedFallback = 0x9E3779B97F4A7C15ULL;
  std::uint64_t state_;
};

/// Independent stream for (seed, purpose): FNV-1a of the tag mixed into the
/// seed with a splitmix64 finalizer.
Xorshift64Star make_stream(std::uint64_t seed, std::string_view purpose);

}  // namespace cider
