// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cider/autodiff.hpp"

namespace cider {

/// Skip-connected encoder/decoder. For level i (0 = full resolution):
///   skip_i : conv1x1(in_i -> skip_channels) + IN + act
///   down_i : conv3x3 stride 2 (in_i -> ch_i) + IN + act, conv3x3 (ch_i -> ch_i) + IN + act
///   up_i   : upsample x2 of the deeper output, concat with skip_i, IN,
///            conv3x3 (-> ch_i) + IN + act, conv1x1 (ch_i -> ch_i) + IN + act
/// where in_0 = in_channels and in_i = ch_{i-1}. The head is a biased conv1x1
/// (ch_0 -> 1) followed by a sigmoid. Convolutions that feed an instance norm
/// carry no bias (the norm's shift makes it redundant).
struct GeneratorConfig {
  int in_channels = 16;
  int depth = 3;
  std::vector<int> channels{32, 64, 96};
  int skip_channels = 4;
  int kernel_size = 3;
  double leaky_slope = 0.1;
  std::uint64_t seed = 42;

  void validate() const;
};

inline constexpr std::size_t kMaxGeneratorParams = 1'000'000;

class GeneratorNet {
 public:
  const GeneratorConfig& config() const { return cfg_; }
  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }
  std::size_t param_count() const { return params_.param_count(); }

  /// Records the forward pass on `tape`. H and W must be divisible by 2^depth.
  ad::Var forward(ad::Tape& tape, const Tensor& features);
  /// Convenience: forward on a private tape, value only.
  Image forward(const Tensor& features);

  friend GeneratorNet init_generator(const GeneratorConfig& cfg);

 private:
  ad::Var level(ad::Tape& tape, ad::Var x, int i);
  ad::Var conv_in_act(ad::Tape& tape, ad::Var x, const std::string& prefix, int ksize, int stride);

  GeneratorConfig cfg_;
  ad::ParamSet params_;
};

/// Fan-in scaled uniform initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// drawn in sorted parameter-name order from the "generator" stream of
/// cfg.seed. Instance-norm scales start at 1 and shifts at 0.
GeneratorNet init_generator(const GeneratorConfig& cfg);

/// Parameter count implied by a config, without allocating the network.
std::size_t generator_param_count(const GeneratorConfig& cfg);

void save_generator(const std::filesystem::path& path, const GeneratorNet& net);
/// Loads weights into a network built from `cfg`; names and dims must match.
GeneratorNet load_generator(const std::filesystem::path& path, const GeneratorConfig& cfg);

}  // namespace cider
