// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "cider/tensor.hpp"

// Deterministic test scenes and kernels, so tests and the CLI never need
// external data.
namespace cider::synthetic {

/// Piecewise-constant chart with bars of several widths, discs, a ramp and
/// small blocks; values in [0.1, 0.9].
Image test_chart(int size = 128);

/// Rasterized random camera-shake trajectory inside size x size, normalized.
/// Different seeds give different (but reproducible) shapes.
Kernel motion_kernel(int size, std::uint64_t seed);

struct Spot {
  int y = 0;
  int x = 0;
};

struct SpotsScene {
  Image image;       // background + spots (peaks may exceed 1)
  Image background;  // smooth component alone
  Image spots;       // sparse component alone
  std::vector<Spot> centers;
  double spot_amplitude = 0.0;
  double background_amplitude = 0.0;
  /// 1 where every spot contributes < 1e-3, else 0.
  Image spot_free_mask;
};

/// Sparse Gaussian spots (sigma 1.5) of the given amplitude on a smooth,
/// non-constant background whose peak equals background_amplitude.
SpotsScene spots_on_background(int size = 128, int spot_count = 24, double spot_amplitude = 1.0,
                               double background_amplitude = 0.2, std::uint64_t seed = 7);

/// Sum of broad Gaussian hills scaled to peak `amplitude`.
Image smooth_field(int size, double amplitude, std::uint64_t seed);

}  // namespace cider::synthetic
