// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "conv_gemm.hpp"

#include <Eigen/Core>
#include <algorithm>

namespace cider::detail {

namespace {

using RowMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstBlock = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using Block = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

constexpr int kColumnBlock = 2048;
constexpr int kRowBlock = 64;

}  // namespace

void im2col(const Tensor& x, const ConvGeometry& g, std::vector<real>& cols) {
  const int k = g.ksize;
  const int r = k / 2;
  const int oh = g.out_height();
  const int ow = g.out_width();
  const std::size_t p = g.pixels();
  cols.resize(static_cast<std::size_t>(g.depth()) * p);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < g.in_channels; ++c) {
    auto plane = x.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        real* dst = cols.data() + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * p;
        for (int y = 0; y < oh; ++y) {
          const int sy = std::clamp(g.stride * y + ky - r, 0, g.height - 1);
          const real* row = plane.data() + static_cast<std::size_t>(sy) * g.width;
          for (int xx = 0; xx < ow; ++xx) {
            dst[static_cast<std::size_t>(y) * ow + xx] =
                row[std::clamp(g.stride * xx + kx - r, 0, g.width - 1)];
          }
        }
      }
    }
  }
}

void col2im(const std::vector<real>& dcols, const ConvGeometry& g, Tensor& dx) {
  const int k = g.ksize;
  const int r = k / 2;
  const int oh = g.out_height();
  const int ow = g.out_width();
  const std::size_t p = g.pixels();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < g.in_channels; ++c) {
    auto plane = dx.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const real* src = dcols.data() + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * p;
        for (int y = 0; y < oh; ++y) {
          const int sy = std::clamp(g.stride * y + ky - r, 0, g.height - 1);
          real* row = plane.data() + static_cast<std::size_t>(sy) * g.width;
          for (int xx = 0; xx < ow; ++xx) {
            row[std::clamp(g.stride * xx + kx - r, 0, g.width - 1)] +=
                src[static_cast<std::size_t>(y) * ow + xx];
          }
        }
      }
    }
  }
}

void gemm_forward(const real* weight, const real* cols, std::span<const real> bias,
                  const ConvGeometry& g, real* out) {
  const int m = g.out_channels;
  const int depth = g.depth();
  const auto p = static_cast<int>(g.pixels());
  const int blocks = (p + kColumnBlock - 1) / kColumnBlock;
  Eigen::Map<const RowMat> w(weight, m, depth);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int c0 = b * kColumnBlock;
    const int n = std::min(kColumnBlock, p - c0);
    ConstBlock in(cols + c0, depth, n, Eigen::OuterStride<>(p));
    Block o(out + c0, m, n, Eigen::OuterStride<>(p));
    o.noalias() = w * in;
    if (!bias.empty()) {
      for (int row = 0; row < m; ++row) o.row(row).array() += bias[row];
    }
  }
}

void gemm_weight_grad(const real* gout, const real* cols, const ConvGeometry& g, real* dweight) {
  const int m = g.out_channels;
  const int depth = g.depth();
  const auto p = static_cast<int>(g.pixels());
  const int blocks = (depth + kRowBlock - 1) / kRowBlock;
  Eigen::Map<const RowMat> go(gout, m, p);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int r0 = b * kRowBlock;
    const int n = std::min(kRowBlock, depth - r0);
    ConstBlock c(cols + static_cast<std::size_t>(r0) * p, n, p, Eigen::OuterStride<>(p));
    Block dw(dweight + r0, m, n, Eigen::OuterStride<>(depth));
    dw.noalias() += go * c.transpose();
  }
}

void gemm_input_grad(const real* weight, const real* gout, const ConvGeometry& g, real* dcols) {
  const int m = g.out_channels;
  const int depth = g.depth();
  const auto p = static_cast<int>(g.pixels());
  const int blocks = (p + kColumnBlock - 1) / kColumnBlock;
  Eigen::Map<const RowMat> w(weight, m, depth);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int c0 = b * kColumnBlock;
    const int n = std::min(kColumnBlock, p - c0);
    ConstBlock go(gout + c0, m, n, Eigen::OuterStride<>(p));
    Block dc(dcols + c0, depth, n, Eigen::OuterStride<>(p));
    dc.noalias() = w.transpose() * go;
  }
}

}  // namespace cider::detail
