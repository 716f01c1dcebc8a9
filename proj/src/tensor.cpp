// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cider {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "configuration";
    case ErrorKind::Input: return "input";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Format: return "format";
    case ErrorKind::Architecture: return "architecture";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

std::string Shape::str() const {
  return "[" + std::to_string(channels) + ", " + std::to_string(height) + ", " +
         std::to_string(width) + "]";
}

Tensor::Tensor(int channels, int height, int width, real fill)
    : shape_{channels, height, width} {
  if (channels < 0 || height < 0 || width < 0) {
    throw Error(ErrorKind::Shape, "negative tensor dimension " + shape_.str());
  }
  data_.assign(shape_.size(), fill);
}

Tensor::Tensor(Shape shape, std::vector<real> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw Error(ErrorKind::Shape, "data length " + std::to_string(data_.size()) +
                                      " does not match shape " + shape_.str());
  }
}

Tensor Tensor::slice(int c) const {
  Tensor out(1, height(), width());
  auto src = channel(c);
  std::copy(src.begin(), src.end(), out.data_.begin());
  return out;
}

void Tensor::set_channel(int c, const Tensor& plane) {
  if (plane.height() != height() || plane.width() != width() || plane.channels() != 1) {
    throw Error(ErrorKind::Shape, "set_channel: " + plane.shape().str() + " into " + shape_.str());
  }
  std::copy(plane.data_.begin(), plane.data_.end(), channel(c).begin());
}

void Tensor::fill(real v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](real v) { return std::isfinite(v); });
}

double Tensor::sum() const {
  double s = 0.0;
  for (real v : data_) s += v;
  return s;
}

real Tensor::min() const { return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end()); }
real Tensor::max() const { return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end()); }

Tensor stack_channels(std::span<const Tensor> planes) {
  if (planes.empty()) return {};
  const int h = planes[0].height();
  const int w = planes[0].width();
  int total = 0;
  for (const auto& p : planes) {
    if (p.height() != h || p.width() != w) {
      throw Error(ErrorKind::Shape, "stack_channels: " + p.shape().str() + " vs " +
                                        planes[0].shape().str());
    }
    total += p.channels();
  }
  Tensor out(total, h, w);
  auto dst = out.data().begin();
  for (const auto& p : planes) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

BoundaryMode parse_boundary(std::string_view name) {
  if (name == "replicate") return BoundaryMode::Replicate;
  if (name == "reflect") return BoundaryMode::Reflect;
  if (name == "circular") return BoundaryMode::Circular;
  throw Error(ErrorKind::Config, "unknown boundary mode '" + std::string(name) + "'");
}

std::string_view to_string(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::Replicate: return "replicate";
    case BoundaryMode::Reflect: return "reflect";
    case BoundaryMode::Circular: return "circular";
  }
  return "replicate";
}

int boundary_index(int i, int n, BoundaryMode mode) {
  if (i >= 0 && i < n) return i;
  switch (mode) {
    case BoundaryMode::Replicate:
      return std::clamp(i, 0, n - 1);
    case BoundaryMode::Circular: {
      int r = i % n;
      return r < 0 ? r + n : r;
    }
    case BoundaryMode::Reflect: {
      if (n == 1) return 0;
      const int period = 2 * (n - 1);
      int r = i % period;
      if (r < 0) r += period;
      return r < n ? r : period - r;
    }
  }
  return std::clamp(i, 0, n - 1);
}

Filter2D::Filter2D(int height, int width, std::vector<real> weights)
    : height_(height), width_(width), weights_(std::move(weights)) {
  if (height <= 0 || width <= 0 || height % 2 == 0 || width % 2 == 0) {
    throw Error(ErrorKind::Config, "filter dimensions must be odd and positive, got " +
                                       std::to_string(height) + "x" + std::to_string(width));
  }
  if (weights_.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorKind::Shape, "filter weight count does not match " + std::to_string(height) +
                                      "x" + std::to_string(width));
  }
  for (real v : weights_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Input, "non-finite filter weight");
  }
}

double Filter2D::sum() const {
  double s = 0.0;
  for (real v : weights_) s += v;
  return s;
}

Kernel Kernel::from_weights(int height, int width, std::vector<real> weights) {
  Filter2D raw(height, width, std::move(weights));
  double total = 0.0;
  for (real v : raw.weights()) {
    if (v < 0.0f) throw Error(ErrorKind::Input, "kernel weight is negative");
    total += v;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::Input, "kernel weights sum to zero");
  std::vector<real> normalized(raw.weights().begin(), raw.weights().end());
  for (real& v : normalized) v = static_cast<real>(v / total);
  return Kernel(Filter2D(height, width, std::move(normalized)));
}

Kernel Kernel::gaussian(int size, double sigma) {
  if (sigma <= 0.0) throw Error(ErrorKind::Config, "gaussian sigma must be positive");
  const int r = size / 2;
  std::vector<real> w(static_cast<std::size_t>(size) * size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double dy = i - r;
      const double dx = j - r;
      w[static_cast<std::size_t>(i) * size + j] =
          static_cast<real>(std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
    }
  }
  return from_weights(size, size, std::move(w));
}

Filter2D flip(const Filter2D& f) {
  std::vector<real> w(f.weights().rbegin(), f.weights().rend());
  return Filter2D(f.height(), f.width(), std::move(w));
}

Kernel flip(const Kernel& k) { return Kernel(flip(k.filter())); }

}  // namespace cider
