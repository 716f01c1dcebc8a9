// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cider/autodiff.hpp"
#include "cider/tensor.hpp"

namespace cider {

struct LossWeights {
  double alpha = 1.0;   // 1 - SSIM data term
  double lambda = 0.01; // Hessian prior
  double beta = 0.01;   // L1 sparsity, microscopy mode only
  /// Divide the Hessian and L1 sums by the pixel count inside total_loss, so
  /// lambda and beta do not depend on image size. The data term is already a
  /// mean.
  bool per_pixel_priors = true;

  /// Throws a Config error if any weight is negative or non-finite.
  void validate() const;
};

struct SSIMParams {
  int window = 11;
  double sigma = 1.5;
  double c1 = 1e-4;  // (0.01 * 1)^2
  double c2 = 9e-4;  // (0.03 * 1)^2
  BoundaryMode boundary = BoundaryMode::Replicate;

  Kernel kernel() const { return Kernel::gaussian(window, sigma); }
};

/// Mean of the local SSIM map; windows are Gaussian-weighted "same" filters.
double ssim(const Image& a, const Image& b, const SSIMParams& p = {});
/// Local SSIM map, same shape as the inputs.
Tensor ssim_map(const Image& a, const Image& b, const SSIMParams& p = {});
/// 10 log10(1 / MSE) for unit peak, capped at 100 dB (MSE == 0 gives 100).
double psnr(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);

/// Non-differentiable evaluation of the prior, for reporting.
double hessian_value(const Image& z);

inline constexpr double kPsnrCap = 100.0;

}  // namespace cider

namespace cider::ad {

/// Mean SSIM between x (differentiable) and a fixed reference y.
Var ssim_index(Var x, const Image& y, const SSIMParams& p = {});
/// 1 - ssim(conv2d_same(x, k), y).
Var loss_ssim(Var x, const Kernel& k, const Image& y, const SSIMParams& p = {},
              BoundaryMode mode = BoundaryMode::Replicate);
/// |z_xx|_1 + |z_yy|_1 + 2 |z_xy|_1 over the interior. z_xx uses [1 -2 1]
/// along a row (x), z_yy along a column; z_xy(i,j) = z(i+1,j+1) - z(i+1,j)
/// - z(i,j+1) + z(i,j). The subgradient of |0| is 0.
Var hessian_reg(Var z);
/// Sum of absolute values.
Var sparsity_l1(Var x);

struct LossParts {
  double data = 0.0;      // 1 - SSIM, unweighted
  double hessian = 0.0;   // unweighted
  double sparsity = 0.0;  // unweighted, 0 unless microscopy
};

/// alpha * loss_ssim + lambda * hessian_reg + (microscopy ? beta * sparsity_l1 : 0),
/// with both prior sums divided by the pixel count when w.per_pixel_priors.
/// Terms with zero weight are not built.
Var total_loss(Var x, const Kernel& k, const Image& y, const LossWeights& w, bool microscopy,
               LossParts* parts = nullptr, const SSIMParams& p = {},
               BoundaryMode mode = BoundaryMode::Replicate);

}  // namespace cider::ad
