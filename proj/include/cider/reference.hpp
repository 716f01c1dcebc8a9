// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "cider/tensor.hpp"

/// Serial, loop-for-loop versions of the parallel kernels. They are kept for
/// equivalence tests and as the baseline in the benchmark target; nothing in
/// the restoration path calls them.
namespace cider::reference {

Tensor conv2d_same(const Tensor& img, const Filter2D& f, BoundaryMode mode);
Tensor correlate2d_same(const Tensor& img, const Filter2D& f, BoundaryMode mode);

/// Scatter-form transpose of conv2d_same.
Tensor conv2d_same_adjoint(const Tensor& g, const Filter2D& f, BoundaryMode mode);

/// Multi-channel learnable convolution with replicate padding.
/// weight is [out, in, k*k], bias may be empty.
Tensor conv_layer(const Tensor& x, const Tensor& weight, int ksize, std::span<const real> bias,
                  int stride);

}  // namespace cider::reference
