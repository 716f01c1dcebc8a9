// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cider/tensor.hpp"

namespace cider {

// Spatial filtering over every channel of a tensor. Output has the input's
// shape. Rows are distributed over OpenMP threads; each output pixel is
// accumulated in double by one thread in a fixed tap order, so results are
// bit-identical for any thread count.

/// out(y,x) = sum_ij f(i,j) * in(y + ry - i, x + rx - j)
Tensor conv2d_same(const Tensor& img, const Filter2D& f,
                   BoundaryMode mode = BoundaryMode::Replicate);
Tensor conv2d_same(const Tensor& img, const Kernel& k, BoundaryMode mode = BoundaryMode::Replicate);

/// out(y,x) = sum_ij f(i,j) * in(y - ry + i, x - rx + j); equals conv2d_same with flip(f).
Tensor correlate2d_same(const Tensor& img, const Filter2D& f,
                        BoundaryMode mode = BoundaryMode::Replicate);
Tensor correlate2d_same(const Tensor& img, const Kernel& k,
                        BoundaryMode mode = BoundaryMode::Replicate);

/// Exact transpose of conv2d_same for the given boundary rule (border taps
/// fold back onto the pixels they were read from). Under Circular this is
/// correlate2d_same.
Tensor conv2d_same_adjoint(const Tensor& g, const Filter2D& f,
                           BoundaryMode mode = BoundaryMode::Replicate);
Tensor correlate2d_same_adjoint(const Tensor& g, const Filter2D& f,
                                BoundaryMode mode = BoundaryMode::Replicate);

enum class ResampleFactor { Up2, Down2 };
enum class ResampleMethod { Nearest, Bilinear };

/// Factor-2 resampling. Nearest-down keeps the top-left sample of each 2x2
/// block; bilinear-up uses half-pixel centres (weights 3/4, 1/4, edge-clamped);
/// bilinear-down averages each 2x2 block.
/// Extends every channel to height x width by padding at the bottom and right.
Tensor pad_bottom_right(const Tensor& t, int height, int width, BoundaryMode mode = BoundaryMode::Replicate);

Tensor resample(const Tensor& t, ResampleFactor factor, ResampleMethod method);

}  // namespace cider
