// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cider/error.hpp"

namespace cider {

// Element type of every tensor. The default build uses 32-bit floats; the
// CIDER_DOUBLE build exists so finite-difference checks have headroom.
#ifdef CIDER_DOUBLE
using real = double;
#else
using real = float;
#endif

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return plane() * channels; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense [channels, height, width] array of 32-bit floats, row-major and
/// channel-major. An Image is a Tensor with a single channel.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, real fill = 0.0f);
  explicit Tensor(Shape shape, real fill = 0.0f)
      : Tensor(shape.channels, shape.height, shape.width, fill) {}
  Tensor(Shape shape, std::vector<real> data);

  static Tensor scalar(real v) { return Tensor(1, 1, 1, v); }

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  real& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  real at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  real& operator()(int y, int x) { return at(0, y, x); }
  real operator()(int y, int x) const { return at(0, y, x); }
  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }

  std::span<real> data() { return data_; }
  std::span<const real> data() const { return data_; }
  std::span<real> channel(int c) { return data().subspan(c * shape_.plane(), shape_.plane()); }
  std::span<const real> channel(int c) const {
    return data().subspan(c * shape_.plane(), shape_.plane());
  }

  /// Copy of one channel as a single-channel tensor.
  Tensor slice(int c) const;
  void set_channel(int c, const Tensor& plane);

  void fill(real v);
  bool all_finite() const;
  double sum() const;
  real min() const;
  real max() const;

  bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

 private:
  Shape shape_;
  std::vector<real> data_;
};

using Image = Tensor;

/// Stacks single-channel tensors of equal size along the channel axis.
Tensor stack_channels(std::span<const Tensor> planes);

enum class BoundaryMode { Replicate, Reflect, Circular };

BoundaryMode parse_boundary(std::string_view name);
std::string_view to_string(BoundaryMode mode);

/// Maps an out-of-range index onto [0, n) for the given boundary rule.
/// Reflect mirrors about the edge samples without repeating them (dcb|abcd|cba).
int boundary_index(int i, int n, BoundaryMode mode);

/// Arbitrary odd-sized 2D filter. Weights are row-major.
class Filter2D {
 public:
  Filter2D() = default;
  Filter2D(int height, int width, std::vector<real> weights);

  static Filter2D delta() { return Filter2D(1, 1, {1.0f}); }

  int height() const { return height_; }
  int width() const { return width_; }
  int radius_y() const { return height_ / 2; }
  int radius_x() const { return width_ / 2; }
  real operator()(int i, int j) const { return weights_[static_cast<std::size_t>(i) * width_ + j]; }
  std::span<const real> weights() const { return weights_; }
  double sum() const;
  bool operator==(const Filter2D&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<real> weights_;
};

/// Point-spread function: odd dimensions, non-negative weights summing to one.
class Kernel {
 public:
  Kernel() : filter_(Filter2D::delta()) {}

  /// Validates and normalizes raw weights to unit sum.
  static Kernel from_weights(int height, int width, std::vector<real> weights);
  static Kernel delta() { return Kernel(); }
  static Kernel gaussian(int size, double sigma);

  const Filter2D& filter() const { return filter_; }
  int height() const { return filter_.height(); }
  int width() const { return filter_.width(); }
  real operator()(int i, int j) const { return filter_(i, j); }
  std::span<const real> weights() const { return filter_.weights(); }
  bool operator==(const Kernel&) const = default;

 private:
  explicit Kernel(Filter2D f) : filter_(std::move(f)) {}
  friend Kernel flip(const Kernel& k);

  Filter2D filter_;
};

/// 180-degree rotation: element (i, j) moves to (H-1-i, W-1-j).
Filter2D flip(const Filter2D& f);
Kernel flip(const Kernel& k);

}  // namespace cider
