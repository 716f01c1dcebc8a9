// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <vector>

#include "cider/tensor.hpp"

namespace cider {

/// Db6 is the 12-tap filter with six vanishing moments; Db3 is the 6-tap
/// filter that some texts also call "D6".
enum class WaveletFamily { Db6, Db3 };

struct WaveletFilters {
  std::vector<double> dec_lo;
  std::vector<double> dec_hi;
  std::vector<double> rec_lo;
  std::vector<double> rec_hi;

  static const WaveletFilters& get(WaveletFamily family);
  int length() const { return static_cast<int>(dec_lo.size()); }
};

/// One decomposition level. `height`/`width` is the size of the signal that
/// was decomposed at this level, needed to crop the reconstruction.
struct WaveletLevel {
  Image approx;
  Image horizontal;
  Image vertical;
  Image diagonal;
  int height = 0;
  int width = 0;
};

/// Levels are ordered finest first. Reconstruction starts from the
/// approximation band of the last level; intermediate approximations are
/// kept for inspection only.
struct WaveletPyramid {
  WaveletFamily family = WaveletFamily::Db6;
  std::vector<WaveletLevel> levels;

  const Image& coarsest() const { return levels.back().approx; }
  Image& coarsest() { return levels.back().approx; }
  void zero_details();
};

// 1D analysis with half-sample symmetric extension (...cba|abc...|cba...).
// A length-n signal produces floor((n + L - 1) / 2) coefficients per band.
void dwt1(std::span<const real> x, const WaveletFilters& f, std::span<real> lo, std::span<real> hi);
int dwt1_length(int n, const WaveletFilters& f);
/// Synthesis: produces 2 * len - L + 2 samples; callers crop to the original length.
void idwt1(std::span<const real> lo, std::span<const real> hi, const WaveletFilters& f,
           std::span<real> out);

/// Largest level count accepted for an image whose short side is `n`:
/// floor(log2(n)) + 1, i.e. the last level still decomposes at least one
/// nominal sample.
int max_wavelet_levels(int height, int width);

WaveletPyramid dwt2(const Image& img, int levels, WaveletFamily family = WaveletFamily::Db6);
Image idwt2(const WaveletPyramid& pyr);

}  // namespace cider
