// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "cider/io.hpp"
#include "cider/tensor.hpp"

namespace cider {

inline constexpr int kFeatureChannels = 16;

/// Weights of one learned convolution: weight is [out, in, k*k].
struct ConvWeights {
  Tensor weight;
  std::vector<real> bias;
  int ksize = 3;
};

struct ResidualBlock {
  ConvWeights first;
  ConvWeights second;
};

/// Source of the 16 feature maps. Analytic mode is a fixed linear filter bank;
/// Loaded mode runs one convolution followed by three residual blocks
/// (x + conv(relu(conv(x)))) from a CIDRW001 file.
class FilterBank {
 public:
  enum class Mode { Analytic, Loaded };

  Mode mode() const { return mode_; }
  const std::vector<Filter2D>& analytic_filters() const { return analytic_; }
  const ConvWeights& stem() const { return stem_; }
  const std::array<ResidualBlock, 3>& blocks() const { return blocks_; }

  friend FilterBank analytic_bank();
  friend FilterBank load_weights(const std::filesystem::path& path);
  friend FilterBank bank_from_arrays(const std::vector<io::NamedArray>& arrays);

 private:
  Mode mode_ = Mode::Analytic;
  std::vector<Filter2D> analytic_;
  ConvWeights stem_;
  std::array<ResidualBlock, 3> blocks_;
};

/// The built-in bank, in channel order:
///   0      identity (1x1 delta)
///   1, 2   Gaussian blur, sigma 1 (7x7) and sigma 2 (13x13)
///   3, 4   forward differences along x and y
///   5, 6   second differences along x and y
///   7      mixed difference z(i+1,j+1) - z(i+1,j) - z(i,j+1) + z(i,j)
///   8      5-point Laplacian
///   9..15  difference-of-offset-Gaussian edge detectors (sigma 1, offset 1)
///          at angles k*pi/7, k = 0..6, scaled to unit absolute mass / 2
FilterBank analytic_bank();

/// Expected layer names: conv0.weight [16,1,k,k], conv0.bias [16], and for
/// b in 0..2: block{b}.conv{1,2}.weight [16,16,k,k], block{b}.conv{1,2}.bias [16].
FilterBank load_weights(const std::filesystem::path& path);
FilterBank bank_from_arrays(const std::vector<io::NamedArray>& arrays);
std::vector<io::NamedArray> bank_to_arrays(const FilterBank& bank);

/// 16-channel stack with the image's height and width.
Tensor extract_features(const Image& y, const FilterBank& bank);

/// Per-channel affine map v -> v * scale + offset.
struct ChannelAffine {
  double scale = 1.0;
  double offset = 0.0;
  bool constant = false;
  double constant_value = 0.0;
};

struct FeatureNormalization {
  static constexpr double kFloor = 1e-3;
  std::vector<ChannelAffine> channels;
};

/// Maps each channel onto [1e-3, 1] from its own min/max; constant channels
/// become 0.5 everywhere.
std::pair<Tensor, FeatureNormalization> positify(const Tensor& stack);
Tensor depositify(const Tensor& stack, const FeatureNormalization& norm);

}  // namespace cider
