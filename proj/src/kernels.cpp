// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/kernels.hpp"

#include <vector>

namespace cider {

namespace {

void require_finite(const Tensor& t, const char* op) {
  if (t.empty()) throw Error(ErrorKind::Input, std::string(op) + ": empty input");
  if (!t.all_finite()) throw Error(ErrorKind::Input, std::string(op) + ": non-finite input value");
}

// Extends one plane by (ry, rx) on each side using the boundary rule.
std::vector<real> pad_plane(std::span<const real> src, int h, int w, int ry, int rx,
                             BoundaryMode mode) {
  const int ph = h + 2 * ry;
  const int pw = w + 2 * rx;
  std::vector<int> col_map(pw);
  for (int x = 0; x < pw; ++x) col_map[x] = boundary_index(x - rx, w, mode);
  std::vector<real> out(static_cast<std::size_t>(ph) * pw);
  for (int y = 0; y < ph; ++y) {
    const real* row = src.data() + static_cast<std::size_t>(boundary_index(y - ry, h, mode)) * w;
    real* dst = out.data() + static_cast<std::size_t>(y) * pw;
    for (int x = 0; x < pw; ++x) dst[x] = row[col_map[x]];
  }
  return out;
}

// Valid correlation of a padded plane: out(y,x) = sum_ij f(i,j) pad(y+i, x+j).
void correlate_valid(const real* pad, int pw, int out_h, int out_w, const Filter2D& f,
                     real* out) {
  const int fh = f.height();
  const int fw = f.width();
#pragma omp parallel
  {
    std::vector<double> acc(out_w);
#pragma omp for schedule(static)
    for (int y = 0; y < out_h; ++y) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int i = 0; i < fh; ++i) {
        const real* row = pad + static_cast<std::size_t>(y + i) * pw;
        for (int j = 0; j < fw; ++j) {
          const double kv = f(i, j);
          const real* src = row + j;
          for (int x = 0; x < out_w; ++x) acc[x] += kv * src[x];
        }
      }
      real* dst = out + static_cast<std::size_t>(y) * out_w;
      for (int x = 0; x < out_w; ++x) dst[x] = static_cast<real>(acc[x]);
    }
  }
}

Tensor filter_same(const Tensor& img, const Filter2D& oriented, BoundaryMode mode) {
  const int h = img.height();
  const int w = img.width();
  const int ry = oriented.radius_y();
  const int rx = oriented.radius_x();
  Tensor out(img.shape());
  for (int c = 0; c < img.channels(); ++c) {
    const auto pad = pad_plane(img.channel(c), h, w, ry, rx, mode);
    correlate_valid(pad.data(), w + 2 * rx, h, w, oriented, out.channel(c).data());
  }
  return out;
}

// Transpose of filter_same: spread g over the padded frame, then fold the
// border back through the boundary map.
Tensor filter_same_adjoint(const Tensor& g, const Filter2D& oriented, BoundaryMode mode) {
  const int h = g.height();
  const int w = g.width();
  const int ry = oriented.radius_y();
  const int rx = oriented.radius_x();
  const int ph = h + 2 * ry;
  const int pw = w + 2 * rx;
  const Filter2D reversed = flip(oriented);
  Tensor out(g.shape());
  std::vector<real> zpad(static_cast<std::size_t>(h + 4 * ry) * (w + 4 * rx));
  std::vector<real> spread(static_cast<std::size_t>(ph) * pw);
  std::vector<double> fold(static_cast<std::size_t>(h) * w);
  std::vector<int> col_map(pw);
  for (int x = 0; x < pw; ++x) col_map[x] = boundary_index(x - rx, w, mode);

  for (int c = 0; c < g.channels(); ++c) {
    std::fill(zpad.begin(), zpad.end(), 0.0f);
    auto src = g.channel(c);
    for (int y = 0; y < h; ++y) {
      std::copy_n(src.data() + static_cast<std::size_t>(y) * w, w,
                  zpad.data() + static_cast<std::size_t>(y + 2 * ry) * (w + 4 * rx) + 2 * rx);
    }
    correlate_valid(zpad.data(), w + 4 * rx, ph, pw, reversed, spread.data());

    std::fill(fold.begin(), fold.end(), 0.0);
    for (int y = 0; y < ph; ++y) {
      double* dst = fold.data() + static_cast<std::size_t>(boundary_index(y - ry, h, mode)) * w;
      const real* row = spread.data() + static_cast<std::size_t>(y) * pw;
      for (int x = 0; x < pw; ++x) dst[col_map[x]] += row[x];
    }
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < fold.size(); ++i) dst[i] = static_cast<real>(fold[i]);
  }
  return out;
}

}  // namespace

Tensor conv2d_same(const Tensor& img, const Filter2D& f, BoundaryMode mode) {
  require_finite(img, "conv2d_same");
  return filter_same(img, flip(f), mode);
}

Tensor conv2d_same(const Tensor& img, const Kernel& k, BoundaryMode mode) {
  return conv2d_same(img, k.filter(), mode);
}

Tensor correlate2d_same(const Tensor& img, const Filter2D& f, BoundaryMode mode) {
  require_finite(img, "correlate2d_same");
  return filter_same(img, f, mode);
}

Tensor correlate2d_same(const Tensor& img, const Kernel& k, BoundaryMode mode) {
  return correlate2d_same(img, k.filter(), mode);
}

Tensor conv2d_same_adjoint(const Tensor& g, const Filter2D& f, BoundaryMode mode) {
  require_finite(g, "conv2d_same_adjoint");
  return filter_same_adjoint(g, flip(f), mode);
}

Tensor correlate2d_same_adjoint(const Tensor& g, const Filter2D& f, BoundaryMode mode) {
  require_finite(g, "correlate2d_same_adjoint");
  return filter_same_adjoint(g, f, mode);
}

Tensor resample(const Tensor& t, ResampleFactor factor, ResampleMethod method) {
  const int c = t.channels();
  const int h = t.height();
  const int w = t.width();
  if (factor == ResampleFactor::Up2) {
    Tensor out(c, 2 * h, 2 * w);
    for (int ch = 0; ch < c; ++ch) {
      if (method == ResampleMethod::Nearest) {
        for (int y = 0; y < 2 * h; ++y)
          for (int x = 0; x < 2 * w; ++x) out.at(ch, y, x) = t.at(ch, y / 2, x / 2);
        continue;
      }
      // Separable half-pixel bilinear: output 2i leans on i-1, 2i+1 on i+1.
      Tensor rows(1, h, 2 * w);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const real centre = t.at(ch, y, x);
          rows(y, 2 * x) = 0.75f * centre + 0.25f * t.at(ch, y, std::max(x - 1, 0));
          rows(y, 2 * x + 1) = 0.75f * centre + 0.25f * t.at(ch, y, std::min(x + 1, w - 1));
        }
      }
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < 2 * w; ++x) {
          const real centre = rows(y, x);
          out.at(ch, 2 * y, x) = 0.75f * centre + 0.25f * rows(std::max(y - 1, 0), x);
          out.at(ch, 2 * y + 1, x) = 0.75f * centre + 0.25f * rows(std::min(y + 1, h - 1), x);
        }
      }
    }
    return out;
  }

  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(ErrorKind::Shape, "downsample by 2 needs even dimensions, got " + t.shape().str());
  }
  Tensor out(c, h / 2, w / 2);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h / 2; ++y) {
      for (int x = 0; x < w / 2; ++x) {
        if (method == ResampleMethod::Nearest) {
          out.at(ch, y, x) = t.at(ch, 2 * y, 2 * x);
        } else {
          out.at(ch, y, x) = 0.25f * (t.at(ch, 2 * y, 2 * x) + t.at(ch, 2 * y, 2 * x + 1) +
                                      t.at(ch, 2 * y + 1, 2 * x) + t.at(ch, 2 * y + 1, 2 * x + 1));
        }
      }
    }
  }
  return out;
}

Tensor pad_bottom_right(const Tensor& t, int height, int width, BoundaryMode mode) {
  if (height < t.height() || width < t.width()) {
    throw Error(ErrorKind::Shape, "pad_bottom_right: target " + std::to_string(height) + "x" +
                                      std::to_string(width) + " is smaller than " + t.shape().str());
  }
  Tensor out(t.channels(), height, width);
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        out.at(c, y, x) = t.at(c, boundary_index(y, t.height(), mode), boundary_index(x, t.width(), mode));
  return out;
}

}  // namespace cider
