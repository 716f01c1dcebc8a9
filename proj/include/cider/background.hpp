// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cider/tensor.hpp"
#include "cider/wavelet.hpp"

namespace cider {

/// How the initial residual treats pixels strictly above the image mean.
/// Zero drops them (the literal published step); Clip lowers them to the mean;
/// Keep leaves y untouched and relies on the sqrt(y)/2 cap alone.
enum class AboveMean { Keep, Clip, Zero };

struct BackgroundConfig {
  int iterations = 3;
  int levels = 7;
  WaveletFamily family = WaveletFamily::Db6;
  AboveMean above_mean = AboveMean::Keep;
};

struct BackgroundEstimate {
  Image background;
  int iterations_used = 0;
};

/// Iterative wavelet background estimate for fluorescence-style images.
///
/// Pixels strictly above the image mean are zeroed to form the starting
/// residual. Each iteration keeps only the coarsest approximation band of the
/// residual's wavelet decomposition, reconstructs it, and takes the pointwise
/// minimum with sqrt(y)/2 (y being the original input). The final residual,
/// clamped at zero, is the background.
///
/// The level count is reduced to what the image size supports.
BackgroundEstimate estimate_background(const Image& y, const BackgroundConfig& cfg = {});

/// max(y - background, 0).
Image remove_background(const Image& y, const BackgroundConfig& cfg = {});
Image subtract_background(const Image& y, const Image& background);

}  // namespace cider
