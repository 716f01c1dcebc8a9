// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cider/tensor.hpp"

namespace cider {

struct RLConfig {
  enum class Init { Observed, Constant };

  int iterations = 50;
  double denom_floor = 1e-12;
  Init init = Init::Observed;
  BoundaryMode boundary = BoundaryMode::Replicate;

  static RLConfig image_defaults() { return {}; }
  static RLConfig feature_defaults() {
    RLConfig c;
    c.iterations = 30;
    return c;
  }
};

/// x <- x * correlate(y / max(conv(x, k), floor), k), starting from y (or 0.5).
Image rl_image(const Image& y, const Kernel& k, const RLConfig& cfg = {});

/// One RL update of x against the observation y.
Image rl_step(const Image& x, const Image& y, const Kernel& k, const RLConfig& cfg = {});

/// Runs rl_image on every channel after mapping it to [1e-3, 1], then maps
/// the result back through the same affine transform.
Tensor rl_features(const Tensor& stack, const Kernel& k, const RLConfig& cfg = RLConfig::feature_defaults());

}  // namespace cider
