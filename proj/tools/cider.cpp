// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Every subcommand prints one key=value result line
// on stdout and a short human summary on stderr.
//
// Exit codes: 0 success, 1 bad input/config/usage, 2 internal failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cider/background.hpp"
#include "cider/error.hpp"
#include "cider/io.hpp"
#include "cider/losses.hpp"
#include "cider/pipeline.hpp"
#include "cider/richardson_lucy.hpp"

namespace {

using namespace cider;
using nlohmann::json;

Image to_gray(const Tensor& t) {
  if (t.channels() == 1) return t;
  if (t.channels() != 3) {
    throw Error(ErrorKind::Input, "expected a grayscale or RGB image, got " + t.shape().str());
  }
  Image g(1, t.height(), t.width());
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      g(y, x) = static_cast<real>(0.299 * t.at(0, y, x) + 0.587 * t.at(1, y, x) + 0.114 * t.at(2, y, x));
  return g;
}

Image load_gray(const std::string& path) { return to_gray(io::read_image(path)); }

void save(const std::string& path, Image img) {
  if (std::filesystem::path(path).extension() == ".png") {
    for (real& v : img.data()) v = std::clamp<real>(v, 0, 1);
  }
  io::write_image(path, img);
}

void write_json(const std::string& path, const json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

struct Options {
  std::string input, kernel, output, config, report, save_background;
  std::string a, b, dataset, kernels;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  bool microscopy = false;
  std::string noise = "gaussian";
  double sigma = 0.01;
  double peak = 1000.0;
  int workers = 1;
};

RestoreConfig config_from(const Options& o) {
  RestoreConfig cfg = o.config.empty() ? RestoreConfig{} : RestoreConfig::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.iters) cfg.T = *o.iters;
  if (o.microscopy) cfg.microscopy_mode = true;
  cfg.validate();
  return cfg;
}

DegradationSpec::Noise parse_noise(const std::string& s) {
  if (s == "none") return DegradationSpec::Noise::None;
  if (s == "gaussian") return DegradationSpec::Noise::Gaussian;
  if (s == "poisson") return DegradationSpec::Noise::Poisson;
  throw Error(ErrorKind::Usage, "unknown noise model '" + s + "' (none, gaussian, poisson)");
}

int cmd_deconvolve(const Options& o) {
  const RestoreConfig cfg = config_from(o);
  const Image y = load_gray(o.input);
  const Kernel k = io::read_kernel(o.kernel);
  const auto start = std::chrono::steady_clock::now();
  int last_reported = 0;
  const RestoreResult r = restore(y, k, cfg, [&](const IterationRecord& rec) {
    if (rec.t == cfg.T || rec.t - last_reported >= 500) {
      std::fprintf(stderr, "  t=%d loss=%.6f lr=%g\n", rec.t, rec.loss, rec.lr);
      last_reported = rec.t;
    }
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save(o.output, r.image);
  if (!o.save_background.empty() && r.background) save(o.save_background, *r.background);

  const std::string report = o.report.empty() ? o.output + ".json" : o.report;
  json side;
  side["input"] = o.input;
  side["kernel"] = o.kernel;
  side["output"] = o.output;
  side["config"] = cfg.to_json();
  side["config_hash"] = cfg.hash();
  side["param_count"] = r.param_count;
  side["loss_trace"] = r.loss_trace;
  side["final_loss"] = r.loss_trace.empty() ? 0.0 : r.loss_trace.back();
  side["wall_seconds"] = seconds;
  write_json(report, side);

  std::printf("output=%s report=%s config_hash=%s param_count=%zu final_loss=%.6f\n", o.output.c_str(),
              report.c_str(), cfg.hash().c_str(), r.param_count, side["final_loss"].get<double>());
  std::fprintf(stderr, "restored %dx%d in %.1f s (T=%d)\n", y.height(), y.width(), seconds, cfg.T);
  return 0;
}

int cmd_rl(const Options& o) {
  const Image y = load_gray(o.input);
  const Kernel k = io::read_kernel(o.kernel);
  RLConfig rl;
  rl.iterations = o.iters.value_or(50);
  const Image x = rl_image(y, k, rl);
  save(o.output, x);
  std::printf("output=%s iterations=%d\n", o.output.c_str(), rl.iterations);
  std::fprintf(stderr, "%d Richardson-Lucy iterations on %dx%d\n", rl.iterations, y.height(), y.width());
  return 0;
}

int cmd_simulate(const Options& o) {
  const Image x = load_gray(o.input);
  DegradationSpec spec;
  spec.kernel = io::read_kernel(o.kernel);
  spec.kernel_path = o.kernel;
  spec.noise = parse_noise(o.noise);
  spec.sigma = o.sigma;
  spec.peak = o.peak;
  const std::uint64_t seed = o.seed.value_or(42);
  save(o.output, simulate_blur(x, spec, seed));
  std::printf("output=%s noise=%s seed=%llu\n", o.output.c_str(), o.noise.c_str(),
              static_cast<unsigned long long>(seed));
  return 0;
}

int cmd_background(const Options& o) {
  const RestoreConfig cfg = o.config.empty() ? RestoreConfig{} : RestoreConfig::load(o.config);
  const Image y = load_gray(o.input);
  const BackgroundEstimate bg = estimate_background(y, cfg.background);
  const Image out = subtract_background(y, bg.background);
  save(o.output, out);
  if (!o.save_background.empty()) save(o.save_background, bg.background);
  std::printf("output=%s background_mean=%.6f iterations=%d\n", o.output.c_str(),
              bg.background.sum() / static_cast<double>(bg.background.size()), bg.iterations_used);
  return 0;
}

int cmd_metrics(const Options& o) {
  const Image a = load_gray(o.a);
  const Image b = load_gray(o.b);
  std::printf("psnr=%.6f ssim=%.6f\n", psnr(a, b), ssim(a, b));
  return 0;
}

int cmd_benchmark(const Options& o) {
  const RestoreConfig cfg = config_from(o);
  BenchmarkOptions opts;
  opts.noise = parse_noise(o.noise);
  opts.sigma = o.sigma;
  opts.peak = o.peak;
  opts.workers = o.workers;
  const BenchmarkReport r = benchmark(o.dataset, o.kernels, cfg, opts);
  if (!o.report.empty()) write_json(o.report, r.to_json());
  std::size_t failed = 0;
  for (const auto& rec : r.records) {
    failed += !rec.error.empty();
    if (!rec.error.empty()) std::fprintf(stderr, "  %s/%s failed: %s\n", rec.name.c_str(), rec.kernel_id.c_str(), rec.error.c_str());
  }
  const auto& m = r.grand_mean;
  std::printf(
      "records=%zu failed=%zu psnr_input=%.4f ssim_input=%.4f psnr_rl=%.4f ssim_rl=%.4f psnr_cider=%.4f "
      "ssim_cider=%.4f\n",
      r.records.size(), failed, m.psnr_input, m.ssim_input, m.psnr_rl_baseline, m.ssim_rl_baseline, m.psnr_cider,
      m.ssim_cider);
  return 0;
}

int cmd_config(const Options& o) {
  const RestoreConfig cfg = config_from(o);
  std::printf("%s\n", cfg.to_json().dump().c_str());
  std::fprintf(stderr, "config_hash=%s\n", cfg.hash().c_str());
  return 0;
}

int exit_code(ErrorKind kind) { return kind == ErrorKind::Internal ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cider: non-blind deconvolution with feature-space Richardson-Lucy and a generator prior"};
  app.require_subcommand(1);
  Options o;

  auto* dec = app.add_subcommand("deconvolve", "restore a blurred image with a known kernel");
  dec->add_option("--input", o.input, "blurred image (.png or .pfm)")->required();
  dec->add_option("--kernel", o.kernel, "kernel text file")->required();
  dec->add_option("--output", o.output, "restored image (.png or .pfm)")->required();
  dec->add_option("--config", o.config, "JSON config");
  dec->add_option("--seed", o.seed, "overrides the config seed");
  dec->add_option("--iters", o.iters, "generator iterations T");
  dec->add_flag("--microscopy", o.microscopy, "background removal and sparsity prior");
  dec->add_option("--save-background", o.save_background, "write the background estimate (microscopy)");
  dec->add_option("--report", o.report, "JSON sidecar (default: <output>.json)");

  auto* rl = app.add_subcommand("rl", "Richardson-Lucy baseline");
  rl->add_option("--input", o.input)->required();
  rl->add_option("--kernel", o.kernel)->required();
  rl->add_option("--output", o.output)->required();
  rl->add_option("--iters", o.iters, "iterations (default 50)");

  auto* sim = app.add_subcommand("simulate", "blur and add noise");
  sim->add_option("--input", o.input)->required();
  sim->add_option("--kernel", o.kernel)->required();
  sim->add_option("--output", o.output)->required();
  sim->add_option("--seed", o.seed);
  sim->add_option("--noise", o.noise, "none, gaussian or poisson")->capture_default_str();
  sim->add_option("--sigma", o.sigma, "Gaussian noise std")->capture_default_str();
  sim->add_option("--peak", o.peak, "Poisson peak photon count")->capture_default_str();

  auto* bg = app.add_subcommand("background", "wavelet background removal");
  bg->add_option("--input", o.input)->required();
  bg->add_option("--output", o.output, "background-subtracted image")->required();
  bg->add_option("--save-background", o.save_background, "write the background estimate");
  bg->add_option("--config", o.config, "JSON config (background section)");

  auto* met = app.add_subcommand("metrics", "PSNR and SSIM between two images");
  met->add_option("--a", o.a)->required();
  met->add_option("--b", o.b)->required();

  auto* bench = app.add_subcommand("benchmark", "every image against every kernel");
  bench->add_option("--dataset", o.dataset, "directory of sharp images")->required();
  bench->add_option("--kernels", o.kernels, "directory of kernel .txt files")->required();
  bench->add_option("--report", o.report, "JSON report path");
  bench->add_option("--config", o.config);
  bench->add_option("--seed", o.seed);
  bench->add_option("--iters", o.iters);
  bench->add_option("--noise", o.noise)->capture_default_str();
  bench->add_option("--sigma", o.sigma)->capture_default_str();
  bench->add_option("--peak", o.peak)->capture_default_str();
  bench->add_option("--workers", o.workers, "parallel restoration jobs")->capture_default_str();

  auto* conf = app.add_subcommand("config", "print the effective configuration as JSON");
  conf->add_option("--config", o.config, "JSON config to merge over the defaults");
  conf->add_option("--seed", o.seed);
  conf->add_option("--iters", o.iters);
  conf->add_flag("--microscopy", o.microscopy);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*dec) return cmd_deconvolve(o);
    if (*rl) return cmd_rl(o);
    if (*sim) return cmd_simulate(o);
    if (*bg) return cmd_background(o);
    if (*met) return cmd_metrics(o);
    if (*bench) return cmd_benchmark(o);
    if (*conf) return cmd_config(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "cider: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cider: internal error: %s\n", e.what());
    return 2;
  }
  return 1;
}
