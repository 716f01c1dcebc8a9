// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/rng.hpp"

#include <cmath>
#include <numbers>

namespace cider {

double Xorshift64Star::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Xorshift64Star::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 1000.0) {
    const double v = std::round(mean + std::sqrt(mean) * normal());
    return v < 0.0 ? 0 : static_cast<std::uint64_t>(v);
  }
  // Sequential inversion of the CDF, computed in log space for large means.
  const double u = uniform();
  std::uint64_t k = 0;
  double log_p = -mean;
  double cdf = std::exp(log_p);
  while (u > cdf && k < 1000000) {
    ++k;
    log_p += std::log(mean) - std::log(static_cast<double>(k));
    cdf += std::exp(log_p);
  }
  return k;
}

Xorshift64Star make_stream(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t tag = 0xcbf29ce484222325ULL;
  for (char ch : purpose) {
    tag ^= static_cast<unsigned char>(ch);
    tag *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed ^ tag;
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return Xorshift64Star(z);
}

}  // namespace cider
