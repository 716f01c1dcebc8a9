// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/background.hpp"

#include <algorithm>
#include <cmath>

#include "cider/instrumentation.hpp"

namespace cider {

BackgroundEstimate estimate_background(const Image& y, const BackgroundConfig& cfg) {
  instrumentation::count(instrumentation::Probe::BackgroundRemoval);
  if (y.channels() != 1) throw Error(ErrorKind::Shape, "background estimation needs one channel");
  if (y.empty()) throw Error(ErrorKind::Input, "background estimation on an empty image");
  if (!y.all_finite()) throw Error(ErrorKind::Input, "background estimation: non-finite pixel");
  if (y.min() < 0.0f) throw Error(ErrorKind::Input, "background estimation: negative pixel values");
  if (cfg.iterations < 1 || cfg.levels < 1) {
    throw Error(ErrorKind::Config, "background estimation needs iterations >= 1 and levels >= 1");
  }

  const double mean = y.sum() / static_cast<double>(y.size());
  Image cap(y.shape());
  Image residual(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    cap[i] = static_cast<real>(std::sqrt(static_cast<double>(y[i])) / 2.0);
    if (static_cast<double>(y[i]) <= mean || cfg.above_mean == AboveMean::Keep) {
      residual[i] = y[i];
    } else {
      residual[i] = cfg.above_mean == AboveMean::Zero ? 0.0f : static_cast<real>(mean);
    }
  }

  const int levels = std::min(cfg.levels, max_wavelet_levels(y.height(), y.width()));
  for (int it = 0; it < cfg.iterations; ++it) {
    WaveletPyramid pyr = dwt2(residual, levels, cfg.family);
    pyr.zero_details();
    const Image low = idwt2(pyr);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = std::min(low[i], cap[i]);
  }
  for (real& v : residual.data()) v = std::max(v, real{0});
  return {std::move(residual), cfg.iterations};
}

Image subtract_background(const Image& y, const Image& background) {
  if (y.shape() != background.shape()) {
    throw Error(ErrorKind::Shape, "background " + background.shape().str() + " vs image " + y.shape().str());
  }
  Image out(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::max(y[i] - background[i], real{0});
  return out;
}

Image remove_background(const Image& y, const BackgroundConfig& cfg) {
  return subtract_background(y, estimate_background(y, cfg).background);
}

}  // namespace cider
