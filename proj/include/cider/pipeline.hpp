// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cider/background.hpp"
#include "cider/generator.hpp"
#include "cider/losses.hpp"
#include "cider/optimizer.hpp"

namespace cider {

struct RestoreConfig {
  int T = 3000;
  int rl_iterations = 30;
  LossWeights weights;
  bool microscopy_mode = false;
  std::uint64_t seed = 42;
  BoundaryMode boundary = BoundaryMode::Replicate;
  std::string bank_path;  // empty: analytic bank
  LrSchedule schedule;
  GeneratorConfig generator;
  BackgroundConfig background;
  /// Pixels trimmed from every side before computing benchmark metrics.
  int metric_crop = 0;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are a Config error.
  static RestoreConfig from_json(const nlohmann::json& j);
  static RestoreConfig load(const std::filesystem::path& path);
  /// FNV-1a over the canonical (sorted-key) JSON form, as 16 hex digits.
  std::string hash() const;
};

struct IterationRecord {
  int t = 0;
  double lr = 0.0;
  double loss = 0.0;
  ad::LossParts parts;
};

struct RestoreResult {
  Image image;
  std::vector<double> loss_trace;
  std::size_t param_count = 0;
  std::optional<Image> background;  // microscopy mode only
  Tensor deconvolved_features;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Background removal (microscopy), feature extraction, feature-space RL,
/// then T NAdam steps on the generator against the composite loss.
RestoreResult restore(const Image& y, const Kernel& k, const RestoreConfig& cfg,
                      const IterationCallback& on_iteration = {});

struct DegradationSpec {
  enum class Noise { None, Gaussian, Poisson };

  Kernel kernel;
  std::filesystem::path kernel_path;  // informational
  Noise noise = Noise::None;
  double sigma = 0.0;  // Gaussian
  double peak = 1.0;   // Poisson

  void validate() const;
};

/// conv2d_same (Replicate), then seeded noise, then clamp to [0, 1].
Image simulate_blur(const Image& x, const DegradationSpec& spec, std::uint64_t seed);

struct BenchmarkRecord {
  std::string name;
  std::string kernel_id;
  double psnr_input = 0.0;
  double ssim_input = 0.0;
  double psnr_rl_baseline = 0.0;
  double ssim_rl_baseline = 0.0;
  double psnr_cider = 0.0;
  double ssim_cider = 0.0;
  double wall_seconds = 0.0;
  std::string config_hash;
  std::string error;  // non-empty if this item failed
};

struct BenchmarkMeans {
  std::string name;  // image name, or "all"
  std::size_t count = 0;
  double psnr_input = 0.0;
  double ssim_input = 0.0;
  double psnr_rl_baseline = 0.0;
  double ssim_rl_baseline = 0.0;
  double psnr_cider = 0.0;
  double ssim_cider = 0.0;
};

struct BenchmarkReport {
  std::string config_hash;
  std::vector<BenchmarkRecord> records;
  std::vector<BenchmarkMeans> per_image;
  BenchmarkMeans grand_mean;

  nlohmann::json to_json() const;
};

struct BenchmarkOptions {
  DegradationSpec::Noise noise = DegradationSpec::Noise::Gaussian;
  double sigma = 0.01;
  double peak = 1000.0;
  int rl_baseline_iterations = 50;
  int workers = 1;
};

/// Means over successful records only.
BenchmarkMeans mean_of(const std::string& name, const std::vector<const BenchmarkRecord*>& records);

/// Every sharp image (.png/.pfm) in `dataset` against every kernel (.txt) in
/// `kernels`, both in sorted filename order.
BenchmarkReport benchmark(const std::filesystem::path& dataset, const std::filesystem::path& kernels,
                          const RestoreConfig& cfg, const BenchmarkOptions& opts = {});

}  // namespace cider
