// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/generator.hpp"

#include <cmath>

#include "cider/io.hpp"
#include "cider/rng.hpp"

namespace cider {

namespace {

struct LayerSpec {
  std::string name;  // prefix, e.g. "down0.conv1"
  int in = 0;
  int out = 0;
  int ksize = 1;
  bool bias = false;
  bool norm = true;
};

struct NormSpec {
  std::string name;
  int channels = 0;
};

struct Architecture {
  std::vector<LayerSpec> convs;
  std::vector<NormSpec> norms;  // only norms not attached to a conv
};

Architecture describe(const GeneratorConfig& cfg) {
  Architecture a;
  const int k = cfg.kernel_size;
  for (int i = 0; i < cfg.depth; ++i) {
    const std::string s = std::to_string(i);
    const int in = i == 0 ? cfg.in_channels : cfg.channels[i - 1];
    const int ch = cfg.channels[i];
    const int deeper = i + 1 < cfg.depth ? cfg.channels[i + 1] : ch;
    a.convs.push_back({"skip" + s + ".conv", in, cfg.skip_channels, 1});
    a.convs.push_back({"down" + s + ".conv1", in, ch, k});
    a.convs.push_back({"down" + s + ".conv2", ch, ch, k});
    a.norms.push_back({"up" + s + ".norm0", cfg.skip_channels + deeper});
    a.convs.push_back({"up" + s + ".conv1", cfg.skip_channels + deeper, ch, k});
    a.convs.push_back({"up" + s + ".conv2", ch, ch, 1});
  }
  a.convs.push_back({"out.conv", cfg.channels[0], 1, 1, true, false});
  return a;
}

std::size_t count(const Architecture& a) {
  std::size_t n = 0;
  for (const auto& c : a.convs) {
    n += static_cast<std::size_t>(c.in) * c.out * c.ksize * c.ksize;
    if (c.bias) n += c.out;
    if (c.norm) n += 2 * static_cast<std::size_t>(c.out);
  }
  for (const auto& nm : a.norms) n += 2 * static_cast<std::size_t>(nm.channels);
  return n;
}

std::string norm_name(const std::string& conv_prefix) {
  // "down0.conv1" -> "down0.norm1", "skip0.conv" -> "skip0.norm"
  std::string s = conv_prefix;
  s.replace(s.find(".conv"), 5, ".norm");
  return s;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (in_channels < 1) throw Error(ErrorKind::Config, "generator in_channels must be >= 1");
  if (depth < 1) throw Error(ErrorKind::Config, "generator depth must be >= 1");
  if (channels.size() != static_cast<std::size_t>(depth)) {
    throw Error(ErrorKind::Config, "generator needs one channel count per level (" + std::to_string(depth) +
                                       "), got " + std::to_string(channels.size()));
  }
  for (int c : channels)
    if (c < 1) throw Error(ErrorKind::Config, "generator channel counts must be >= 1");
  if (skip_channels < 1) throw Error(ErrorKind::Config, "generator skip_channels must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) throw Error(ErrorKind::Config, "generator kernel_size must be odd");
  if (!(leaky_slope >= 0.0)) throw Error(ErrorKind::Config, "generator leaky slope must be >= 0");
}

std::size_t generator_param_count(const GeneratorConfig& cfg) {
  cfg.validate();
  return count(describe(cfg));
}

GeneratorNet init_generator(const GeneratorConfig& cfg) {
  cfg.validate();
  const Architecture arch = describe(cfg);
  const std::size_t n = count(arch);
  if (n > kMaxGeneratorParams) {
    throw Error(ErrorKind::Budget, "generator config has " + std::to_string(n) + " parameters, limit is " +
                                       std::to_string(kMaxGeneratorParams));
  }
  GeneratorNet net;
  net.cfg_ = cfg;
  std::map<std::string, double> bounds;
  for (const auto& c : arch.convs) {
    const auto k = static_cast<std::uint32_t>(c.ksize);
    net.params_.add(c.name + ".w", Tensor(c.out, c.in, c.ksize * c.ksize),
                    {static_cast<std::uint32_t>(c.out), static_cast<std::uint32_t>(c.in), k, k});
    const double bound = 1.0 / std::sqrt(static_cast<double>(c.in) * c.ksize * c.ksize);
    bounds[c.name + ".w"] = bound;
    if (c.bias) {
      net.params_.add(c.name + ".b", Tensor(c.out, 1, 1), {static_cast<std::uint32_t>(c.out)});
      bounds[c.name + ".b"] = bound;
    }
    if (c.norm) {
      net.params_.add(norm_name(c.name) + ".gamma", Tensor(c.out, 1, 1, 1), {static_cast<std::uint32_t>(c.out)});
      net.params_.add(norm_name(c.name) + ".beta", Tensor(c.out, 1, 1, 0), {static_cast<std::uint32_t>(c.out)});
    }
  }
  for (const auto& nm : arch.norms) {
    net.params_.add(nm.name + ".gamma", Tensor(nm.channels, 1, 1, 1), {static_cast<std::uint32_t>(nm.channels)});
    net.params_.add(nm.name + ".beta", Tensor(nm.channels, 1, 1, 0), {static_cast<std::uint32_t>(nm.channels)});
  }
  auto rng = make_stream(cfg.seed, "generator");
  for (auto& [name, p] : net.params_) {
    auto it = bounds.find(name);
    if (it == bounds.end()) continue;
    for (real& v : p.value.data()) v = static_cast<real>(rng.uniform(-it->second, it->second));
  }
  return net;
}

ad::Var GeneratorNet::conv_in_act(ad::Tape& tape, ad::Var x, const std::string& prefix, int ksize, int stride) {
  ad::Var w = tape.parameter(params_.at(prefix + ".w"));
  ad::Var h = stride == 2 ? ad::strided_conv_down2(x, w, ad::Var(), ksize)
                          : ad::learnable_conv2d(x, w, ad::Var(), ksize);
  const std::string norm = norm_name(prefix);
  h = ad::instance_norm(h, tape.parameter(params_.at(norm + ".gamma")), tape.parameter(params_.at(norm + ".beta")));
  return ad::leaky_relu(h, static_cast<float>(cfg_.leaky_slope));
}

ad::Var GeneratorNet::level(ad::Tape& tape, ad::Var x, int i) {
  const std::string s = std::to_string(i);
  const int k = cfg_.kernel_size;
  ad::Var skip = conv_in_act(tape, x, "skip" + s + ".conv", 1, 1);
  ad::Var d = conv_in_act(tape, x, "down" + s + ".conv1", k, 2);
  d = conv_in_act(tape, d, "down" + s + ".conv2", k, 1);
  if (i + 1 < cfg_.depth) d = level(tape, d, i + 1);
  ad::Var u = ad::concat_channels({skip, ad::upsample2(d)});
  u = ad::instance_norm(u, tape.parameter(params_.at("up" + s + ".norm0.gamma")),
                        tape.parameter(params_.at("up" + s + ".norm0.beta")));
  u = conv_in_act(tape, u, "up" + s + ".conv1", k, 1);
  return conv_in_act(tape, u, "up" + s + ".conv2", 1, 1);
}

ad::Var GeneratorNet::forward(ad::Tape& tape, const Tensor& features) {
  if (features.channels() != cfg_.in_channels) {
    throw Error(ErrorKind::Shape, "generator expects " + std::to_string(cfg_.in_channels) + " channels, got " +
                                      features.shape().str());
  }
  const int unit = 1 << cfg_.depth;
  if (features.height() % unit != 0 || features.width() % unit != 0) {
    throw Error(ErrorKind::Shape, "generator input " + features.shape().str() + " must be divisible by " +
                                      std::to_string(unit));
  }
  ad::Var h = level(tape, tape.constant(features), 0);
  h = ad::learnable_conv2d(h, tape.parameter(params_.at("out.conv.w")), tape.parameter(params_.at("out.conv.b")), 1);
  return ad::sigmoid(h);
}

Image GeneratorNet::forward(const Tensor& features) {
  ad::Tape tape;
  return forward(tape, features).value();
}

void save_generator(const std::filesystem::path& path, const GeneratorNet& net) {
  io::write_weights(path, net.params().to_arrays());
}

GeneratorNet load_generator(const std::filesystem::path& path, const GeneratorConfig& cfg) {
  GeneratorNet net = init_generator(cfg);
  net.params().load_arrays(io::read_weights(path));
  return net;
}

}  // namespace cider
