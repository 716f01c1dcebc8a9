// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "cider/tensor.hpp"

// im2col + GEMM convolution used by the learnable layers. Work is split into
// fixed-size column (or row) blocks that do not depend on the thread count;
// each block is one single-threaded Eigen product, so results are identical
// for any OMP_NUM_THREADS.
namespace cider::detail {

struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int ksize = 1;
  int stride = 1;
  int height = 0;  // input
  int width = 0;
  int out_height() const { return height / stride; }
  int out_width() const { return width / stride; }
  int depth() const { return in_channels * ksize * ksize; }
  std::size_t pixels() const { return static_cast<std::size_t>(out_height()) * out_width(); }
  bool is_pointwise() const { return ksize == 1 && stride == 1; }
};

/// Columns [in*k*k, oh*ow] with replicate (clamped) sampling.
void im2col(const Tensor& x, const ConvGeometry& g, std::vector<real>& cols);
/// Scatters column gradients back onto the clamped source pixels.
void col2im(const std::vector<real>& dcols, const ConvGeometry& g, Tensor& dx);

/// out[out, P] = W[out, K] * cols[K, P] (+ bias per row).
void gemm_forward(const real* weight, const real* cols, std::span<const real> bias,
                  const ConvGeometry& g, real* out);
/// dW[out, K] += gout[out, P] * cols[K, P]^T
void gemm_weight_grad(const real* gout, const real* cols, const ConvGeometry& g, real* dweight);
/// dcols[K, P] = W[out, K]^T * gout[out, P]
void gemm_input_grad(const real* weight, const real* gout, const ConvGeometry& g, real* dcols);

}  // namespace cider::detail
