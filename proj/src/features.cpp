// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/features.hpp"

#include <cmath>
#include <numbers>

#include "cider/kernels.hpp"
#include "conv_gemm.hpp"

namespace cider {

namespace {

Filter2D gaussian_filter(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  return Kernel::gaussian(2 * r + 1, sigma).filter();
}

Filter2D oriented_edge(double angle) {
  constexpr int kSize = 7;
  constexpr int r = kSize / 2;
  constexpr double sigma = 1.0;
  constexpr double offset = 1.0;
  const double ux = std::cos(angle);
  const double uy = std::sin(angle);
  std::vector<double> w(kSize * kSize);
  double mass = 0.0;
  for (int i = 0; i < kSize; ++i) {
    for (int j = 0; j < kSize; ++j) {
      const double x = j - r;
      const double y = i - r;
      auto g = [&](double cx, double cy) {
        return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * sigma * sigma));
      };
      const double v = g(offset * ux, offset * uy) - g(-offset * ux, -offset * uy);
      w[i * kSize + j] = v;
      mass += std::abs(v);
    }
  }
  std::vector<real> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) out[k] = static_cast<real>(2.0 * w[k] / mass);
  return Filter2D(kSize, kSize, std::move(out));
}

void check_conv(const io::NamedArray* w, const io::NamedArray* b, const std::string& name, int in_ch,
                ConvWeights& out) {
  if (w == nullptr || b == nullptr) {
    throw Error(ErrorKind::Architecture, "missing layer '" + name + ".weight' or '" + name + ".bias'");
  }
  if (w->dims.size() != 4 || w->dims[2] != w->dims[3] || w->dims[2] % 2 == 0) {
    throw Error(ErrorKind::Architecture, "'" + name + ".weight' must be [out, in, k, k] with odd k");
  }
  if (w->dims[0] != kFeatureChannels) {
    throw Error(ErrorKind::Architecture, "'" + name + ".weight' has " + std::to_string(w->dims[0]) +
                                             " output channels, expected 16");
  }
  if (w->dims[1] != static_cast<std::uint32_t>(in_ch)) {
    throw Error(ErrorKind::Architecture, "'" + name + ".weight' has " + std::to_string(w->dims[1]) +
                                             " input channels, expected " + std::to_string(in_ch));
  }
  if (b->dims != std::vector<std::uint32_t>{kFeatureChannels}) {
    throw Error(ErrorKind::Architecture, "'" + name + ".bias' must have shape [16]");
  }
  const int k = static_cast<int>(w->dims[2]);
  out.ksize = k;
  out.weight = Tensor(Shape{kFeatureChannels, in_ch, k * k}, io::from_f32(w->values));
  out.bias = io::from_f32(b->values);
}

Tensor run_conv(const Tensor& x, const ConvWeights& c) {
  detail::ConvGeometry g{x.channels(), c.weight.channels(), c.ksize, 1, x.height(), x.width()};
  std::vector<real> cols;
  const real* col_ptr = x.data().data();
  if (!g.is_pointwise()) {
    detail::im2col(x, g, cols);
    col_ptr = cols.data();
  }
  Tensor out(g.out_channels, x.height(), x.width());
  detail::gemm_forward(c.weight.data().data(), col_ptr, c.bias, g, out.data().data());
  return out;
}

io::NamedArray conv_array(const std::string& name, const ConvWeights& c) {
  const auto out = static_cast<std::uint32_t>(c.weight.channels());
  const auto in = static_cast<std::uint32_t>(c.weight.height());
  const auto k = static_cast<std::uint32_t>(c.ksize);
  return {name, {out, in, k, k}, io::to_f32(c.weight.data())};
}

}  // namespace

FilterBank analytic_bank() {
  FilterBank bank;
  bank.mode_ = FilterBank::Mode::Analytic;
  auto& f = bank.analytic_;
  f.push_back(Filter2D::delta());
  f.push_back(gaussian_filter(1.0));
  f.push_back(gaussian_filter(2.0));
  f.push_back(Filter2D(1, 3, {1.0f, -1.0f, 0.0f}));
  f.push_back(Filter2D(3, 1, {1.0f, -1.0f, 0.0f}));
  f.push_back(Filter2D(1, 3, {1.0f, -2.0f, 1.0f}));
  f.push_back(Filter2D(3, 1, {1.0f, -2.0f, 1.0f}));
  f.push_back(Filter2D(3, 3, {1.0f, -1.0f, 0.0f, -1.0f, 1.0f, 0.0f, 0.0f, 0.0f, 0.0f}));
  f.push_back(Filter2D(3, 3, {0.0f, 1.0f, 0.0f, 1.0f, -4.0f, 1.0f, 0.0f, 1.0f, 0.0f}));
  for (int k = 0; k < 7; ++k) f.push_back(oriented_edge(k * std::numbers::pi / 7.0));
  return bank;
}

FilterBank bank_from_arrays(const std::vector<io::NamedArray>& arrays) {
  auto find = [&](const std::string& name) -> const io::NamedArray* {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  };
  FilterBank bank;
  bank.mode_ = FilterBank::Mode::Loaded;
  check_conv(find("conv0.weight"), find("conv0.bias"), "conv0", 1, bank.stem_);
  for (int b = 0; b < 3; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    check_conv(find(prefix + ".conv1.weight"), find(prefix + ".conv1.bias"), prefix + ".conv1",
               kFeatureChannels, bank.blocks_[b].first);
    check_conv(find(prefix + ".conv2.weight"), find(prefix + ".conv2.bias"), prefix + ".conv2",
               kFeatureChannels, bank.blocks_[b].second);
  }
  if (arrays.size() != 14) {
    throw Error(ErrorKind::Architecture, "expected 14 layers (1 conv + 3 residual blocks), file has " +
                                             std::to_string(arrays.size()));
  }
  return bank;
}

FilterBank load_weights(const std::filesystem::path& path) {
  return bank_from_arrays(io::read_weights(path));
}

std::vector<io::NamedArray> bank_to_arrays(const FilterBank& bank) {
  if (bank.mode() != FilterBank::Mode::Loaded) {
    throw Error(ErrorKind::Contract, "only loaded banks can be serialized");
  }
  std::vector<io::NamedArray> out;
  auto push = [&](const std::string& name, const ConvWeights& c) {
    out.push_back(conv_array(name + ".weight", c));
    out.push_back({name + ".bias", {kFeatureChannels}, io::to_f32(c.bias)});
  };
  push("conv0", bank.stem());
  for (int b = 0; b < 3; ++b) {
    push("block" + std::to_string(b) + ".conv1", bank.blocks()[b].first);
    push("block" + std::to_string(b) + ".conv2", bank.blocks()[b].second);
  }
  return out;
}

Tensor extract_features(const Image& y, const FilterBank& bank) {
  if (y.channels() != 1) throw Error(ErrorKind::Shape, "feature extraction expects one channel, got " + y.shape().str());
  if (bank.mode() == FilterBank::Mode::Analytic) {
    std::vector<Tensor> maps;
    maps.reserve(bank.analytic_filters().size());
    for (const auto& f : bank.analytic_filters()) maps.push_back(conv2d_same(y, f, BoundaryMode::Replicate));
    return stack_channels(maps);
  }
  Tensor x = run_conv(y, bank.stem());
  for (const auto& block : bank.blocks()) {
    Tensor h = run_conv(x, block.first);
    for (real& v : h.data()) v = std::max(v, real{0});
    Tensor r = run_conv(h, block.second);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += r[i];
  }
  return x;
}

std::pair<Tensor, FeatureNormalization> positify(const Tensor& stack) {
  constexpr double eps = FeatureNormalization::kFloor;
  FeatureNormalization norm;
  Tensor out(stack.shape());
  for (int c = 0; c < stack.channels(); ++c) {
    auto src = stack.channel(c);
    auto dst = out.channel(c);
    const auto [lo_it, hi_it] = std::minmax_element(src.begin(), src.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    ChannelAffine a;
    if (!(hi > lo)) {
      a.scale = 0.0;
      a.offset = 0.5;
      a.constant = true;
      a.constant_value = lo;
      std::fill(dst.begin(), dst.end(), 0.5f);
    } else {
      a.scale = (1.0 - eps) / (hi - lo);
      a.offset = eps - lo * a.scale;
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<real>(std::clamp(src[i] * a.scale + a.offset, eps, 1.0));
      }
    }
    norm.channels.push_back(a);
  }
  return {std::move(out), std::move(norm)};
}

Tensor depositify(const Tensor& stack, const FeatureNormalization& norm) {
  if (norm.channels.size() != static_cast<std::size_t>(stack.channels())) {
    throw Error(ErrorKind::Shape, "normalization has " + std::to_string(norm.channels.size()) +
                                      " channels, stack " + stack.shape().str());
  }
  Tensor out(stack.shape());
  for (int c = 0; c < stack.channels(); ++c) {
    const auto& a = norm.channels[c];
    auto src = stack.channel(c);
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = a.constant ? static_cast<real>(a.constant_value + (src[i] - 0.5))
                          : static_cast<real>((src[i] - a.offset) / a.scale);
    }
  }
  return out;
}

}  // namespace cider
