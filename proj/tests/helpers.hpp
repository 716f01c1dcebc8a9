// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cider/rng.hpp"
#include "cider/tensor.hpp"
#include "oracles.hpp"

namespace testing {

inline cider::Tensor random_tensor(cider::Shape s, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  auto rng = cider::make_stream(seed, "test");
  cider::Tensor t(s);
  for (auto& v : t.data()) v = static_cast<cider::real>(rng.uniform(lo, hi));
  return t;
}

inline cider::Kernel random_kernel(int h, int w, std::uint64_t seed) {
  auto rng = cider::make_stream(seed, "test-kernel");
  std::vector<cider::real> v(static_cast<std::size_t>(h) * w);
  for (auto& x : v) x = static_cast<cider::real>(rng.uniform(0.05, 1.0));
  return cider::Kernel::from_weights(h, w, std::move(v));
}

inline double max_abs_diff(const oracle::Grid& g, const cider::Tensor& t, int c = 0) {
  double m = 0.0;
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) m = std::max(m, std::abs(g(y, x) - t.at(c, y, x)));
  return m;
}

inline double max_abs_diff(const cider::Tensor& a, const cider::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

inline double dot(const cider::Tensor& a, const cider::Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cider-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
