// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/reference.hpp"

#include <algorithm>
#include <vector>

namespace cider::reference {

Tensor conv2d_same(const Tensor& img, const Filter2D& f, BoundaryMode mode) {
  const int h = img.height();
  const int w = img.width();
  const int ry = f.radius_y();
  const int rx = f.radius_x();
  Tensor out(img.shape());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = f.height() - 1; i >= 0; --i) {
          for (int j = f.width() - 1; j >= 0; --j) {
            const int sy = boundary_index(y + ry - i, h, mode);
            const int sx = boundary_index(x + rx - j, w, mode);
            acc += static_cast<double>(f(i, j)) * img.at(c, sy, sx);
          }
        }
        out.at(c, y, x) = static_cast<real>(acc);
      }
    }
  }
  return out;
}

Tensor correlate2d_same(const Tensor& img, const Filter2D& f, BoundaryMode mode) {
  const int h = img.height();
  const int w = img.width();
  const int ry = f.radius_y();
  const int rx = f.radius_x();
  Tensor out(img.shape());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = 0; i < f.height(); ++i) {
          for (int j = 0; j < f.width(); ++j) {
            const int sy = boundary_index(y - ry + i, h, mode);
            const int sx = boundary_index(x - rx + j, w, mode);
            acc += static_cast<double>(f(i, j)) * img.at(c, sy, sx);
          }
        }
        out.at(c, y, x) = static_cast<real>(acc);
      }
    }
  }
  return out;
}

Tensor conv2d_same_adjoint(const Tensor& g, const Filter2D& f, BoundaryMode mode) {
  const int h = g.height();
  const int w = g.width();
  const int ry = f.radius_y();
  const int rx = f.radius_x();
  Tensor out(g.shape());
  for (int c = 0; c < g.channels(); ++c) {
    std::vector<double> acc(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double gv = g.at(c, y, x);
        for (int i = 0; i < f.height(); ++i) {
          for (int j = 0; j < f.width(); ++j) {
            const int sy = boundary_index(y + ry - i, h, mode);
            const int sx = boundary_index(x + rx - j, w, mode);
            acc[static_cast<std::size_t>(sy) * w + sx] += f(i, j) * gv;
          }
        }
      }
    }
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<real>(acc[i]);
  }
  return out;
}

Tensor conv_layer(const Tensor& x, const Tensor& weight, int ksize, std::span<const real> bias,
                  int stride) {
  const int cin = x.channels();
  const int cout = weight.channels();
  const int h = x.height();
  const int w = x.width();
  const int oh = h / stride;
  const int ow = w / stride;
  const int r = ksize / 2;
  Tensor out(cout, oh, ow);
  for (int o = 0; o < cout; ++o) {
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (int i = 0; i < cin; ++i) {
          for (int ky = 0; ky < ksize; ++ky) {
            for (int kx = 0; kx < ksize; ++kx) {
              const int sy = std::clamp(stride * y + ky - r, 0, h - 1);
              const int sx = std::clamp(stride * xx + kx - r, 0, w - 1);
              acc += static_cast<double>(weight.at(o, i, ky * ksize + kx)) * x.at(i, sy, sx);
            }
          }
        }
        out.at(o, y, xx) = static_cast<real>(acc);
      }
    }
  }
  return out;
}

}  // namespace cider::reference
