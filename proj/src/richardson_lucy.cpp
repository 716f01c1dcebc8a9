// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/richardson_lucy.hpp"

#include <algorithm>
#include <cmath>

#include "cider/features.hpp"
#include "cider/kernels.hpp"

namespace cider {

namespace {

void validate(const Image& y, const RLConfig& cfg) {
  if (cfg.iterations < 1) throw Error(ErrorKind::Config, "RL iterations must be >= 1");
  if (!(cfg.denom_floor > 0.0)) throw Error(ErrorKind::Config, "RL denominator floor must be > 0");
  if (y.channels() != 1) throw Error(ErrorKind::Shape, "RL expects a single-channel image, got " + y.shape().str());
  for (real v : y.data()) {
    if (std::isnan(v)) throw Error(ErrorKind::Input, "NaN pixel in RL input");
    if (v < 0.0f) throw Error(ErrorKind::Input, "negative pixel in RL input");
  }
}

}  // namespace

Image rl_step(const Image& x, const Image& y, const Kernel& k, const RLConfig& cfg) {
  Image ratio = conv2d_same(x, k, cfg.boundary);
  const real floor = static_cast<real>(cfg.denom_floor);
  for (std::size_t i = 0; i < ratio.size(); ++i) ratio[i] = y[i] / std::max(ratio[i], floor);
  Image next = correlate2d_same(ratio, k, cfg.boundary);
  for (std::size_t i = 0; i < next.size(); ++i) next[i] *= x[i];
  return next;
}

Image rl_image(const Image& y, const Kernel& k, const RLConfig& cfg) {
  validate(y, cfg);
  Image x = cfg.init == RLConfig::Init::Observed ? y : Image(y.shape(), 0.5f);
  for (int it = 0; it < cfg.iterations; ++it) x = rl_step(x, y, k, cfg);
  return x;
}

Tensor rl_features(const Tensor& stack, const Kernel& k, const RLConfig& cfg) {
  if (!stack.all_finite()) throw Error(ErrorKind::Input, "non-finite value in feature stack");
  auto [pos, norm] = positify(stack);
  if (pos.channels() > 0) validate(pos.slice(0), cfg);
  Tensor out(pos.shape());
  // Channels are independent; each one is a fully sequential RL run, and the
  // inputs were validated above so nothing throws inside the parallel region.
  const int n = pos.channels();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n; ++c) {
    out.set_channel(c, rl_image(pos.slice(c), k, cfg));
  }
  return depositify(out, norm);
}

}  // namespace cider
