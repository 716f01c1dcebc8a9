// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "cider/features.hpp"
#include "cider/io.hpp"
#include "cider/kernels.hpp"
#include "cider/richardson_lucy.hpp"
#include "cider/rng.hpp"

namespace cider {

using nlohmann::json;

namespace {

void expect_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::Config, std::string(where) + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw Error(ErrorKind::Config, std::string("unknown key '") + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string family_name(WaveletFamily f) { return f == WaveletFamily::Db6 ? "db6" : "db3"; }

std::string above_mean_name(AboveMean a) {
  return a == AboveMean::Keep ? "keep" : (a == AboveMean::Clip ? "clip" : "zero");
}

AboveMean parse_above_mean(const std::string& s) {
  if (s == "keep") return AboveMean::Keep;
  if (s == "clip") return AboveMean::Clip;
  if (s == "zero") return AboveMean::Zero;
  throw Error(ErrorKind::Config, "unknown above_mean rule '" + s + "' (expected keep, clip or zero)");
}

WaveletFamily parse_family(const std::string& s) {
  if (s == "db6") return WaveletFamily::Db6;
  if (s == "db3") return WaveletFamily::Db3;
  throw Error(ErrorKind::Config, "unknown wavelet family '" + s + "' (expected db6 or db3)");
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.in(name);
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

// ------------------------------------------------------------------ config

void RestoreConfig::validate() const {
  if (T < 1) throw Error(ErrorKind::Config, "T must be >= 1");
  if (rl_iterations < 1) throw Error(ErrorKind::Config, "rl_iterations must be >= 1");
  if (metric_crop < 0) throw Error(ErrorKind::Config, "metric_crop must be >= 0");
  if (!(schedule.base >= 0.0) || !(schedule.factor > 0.0)) {
    throw Error(ErrorKind::Config, "schedule base must be >= 0 and factor > 0");
  }
  if (background.iterations < 1 || background.levels < 1) {
    throw Error(ErrorKind::Config, "background iterations and levels must be >= 1");
  }
  weights.validate();
  generator.validate();
}

json RestoreConfig::to_json() const {
  json j;
  j["T"] = T;
  j["rl_iterations"] = rl_iterations;
  j["weights"] = {{"alpha", weights.alpha},
                  {"lambda", weights.lambda},
                  {"beta", weights.beta},
                  {"per_pixel_priors", weights.per_pixel_priors}};
  j["microscopy_mode"] = microscopy_mode;
  j["seed"] = seed;
  j["boundary"] = std::string(to_string(boundary));
  j["bank"] = bank_path.empty() ? json{{"mode", "analytic"}} : json{{"mode", "loaded"}, {"path", bank_path}};
  j["schedule"] = {{"base", schedule.base}, {"factor", schedule.factor}, {"milestones", schedule.milestones}};
  j["generator"] = {{"in_channels", generator.in_channels},   {"depth", generator.depth},
                    {"channels", generator.channels},         {"skip_channels", generator.skip_channels},
                    {"kernel_size", generator.kernel_size},   {"leaky_slope", generator.leaky_slope}};
  j["background"] = {{"iterations", background.iterations},
                     {"levels", background.levels},
                     {"family", family_name(background.family)},
                     {"above_mean", above_mean_name(background.above_mean)}};
  j["metric_crop"] = metric_crop;
  return j;
}

RestoreConfig RestoreConfig::from_json(const json& j) {
  RestoreConfig c;
  try {
    expect_keys(j, "config", {"T", "rl_iterations", "weights", "microscopy_mode", "seed", "boundary", "bank",
                              "schedule", "generator", "background", "metric_crop"});
    read(j, "T", c.T);
    read(j, "rl_iterations", c.rl_iterations);
    read(j, "microscopy_mode", c.microscopy_mode);
    read(j, "seed", c.seed);
    read(j, "metric_crop", c.metric_crop);
    if (j.contains("boundary")) c.boundary = parse_boundary(j.at("boundary").get<std::string>());
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      expect_keys(w, "weights", {"alpha", "lambda", "beta", "per_pixel_priors"});
      read(w, "alpha", c.weights.alpha);
      read(w, "lambda", c.weights.lambda);
      read(w, "beta", c.weights.beta);
      read(w, "per_pixel_priors", c.weights.per_pixel_priors);
    }
    if (j.contains("bank")) {
      const json& b = j.at("bank");
      expect_keys(b, "bank", {"mode", "path"});
      const std::string mode = b.value("mode", "analytic");
      if (mode == "analytic") {
        c.bank_path.clear();
      } else if (mode == "loaded") {
        c.bank_path = b.at("path").get<std::string>();
        if (c.bank_path.empty()) throw Error(ErrorKind::Config, "loaded bank needs a path");
      } else {
        throw Error(ErrorKind::Config, "bank mode must be 'analytic' or 'loaded'");
      }
    }
    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      expect_keys(s, "schedule", {"base", "factor", "milestones"});
      read(s, "base", c.schedule.base);
      read(s, "factor", c.schedule.factor);
      read(s, "milestones", c.schedule.milestones);
      std::sort(c.schedule.milestones.begin(), c.schedule.milestones.end());
    }
    if (j.contains("generator")) {
      const json& g = j.at("generator");
      expect_keys(g, "generator", {"in_channels", "depth", "channels", "skip_channels", "kernel_size", "leaky_slope"});
      read(g, "in_channels", c.generator.in_channels);
      read(g, "depth", c.generator.depth);
      read(g, "channels", c.generator.channels);
      read(g, "skip_channels", c.generator.skip_channels);
      read(g, "kernel_size", c.generator.kernel_size);
      read(g, "leaky_slope", c.generator.leaky_slope);
    }
    if (j.contains("background")) {
      const json& b = j.at("background");
      expect_keys(b, "background", {"iterations", "levels", "family", "above_mean"});
      read(b, "iterations", c.background.iterations);
      read(b, "levels", c.background.levels);
      if (b.contains("family")) c.background.family = parse_family(b.at("family").get<std::string>());
      if (b.contains("above_mean")) {
        c.background.above_mean = parse_above_mean(b.at("above_mean").get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RestoreConfig RestoreConfig::load(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string RestoreConfig::hash() const {
  const std::string canonical = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

// ----------------------------------------------------------------- restore

RestoreResult restore(const Image& observed, const Kernel& k, const RestoreConfig& cfg,
                      const IterationCallback& on_iteration) {
  cfg.validate();
  if (observed.channels() != 1) {
    throw Error(ErrorKind::Shape, "restore expects a single-channel image, got " + observed.shape().str());
  }
  if (!observed.all_finite()) throw Error(ErrorKind::Input, "restore: non-finite pixel in input");
  RestoreResult result;

  Image y = observed;
  if (cfg.microscopy_mode) {
    BackgroundEstimate bg = stage("background removal", [&] { return estimate_background(y, cfg.background); });
    y = subtract_background(y, bg.background);
    result.background = std::move(bg.background);
  }

  const FilterBank bank = stage("feature bank", [&] {
    return cfg.bank_path.empty() ? analytic_bank() : load_weights(cfg.bank_path);
  });
  const Tensor features = stage("feature extraction", [&] { return extract_features(y, bank); });
  RLConfig rl = RLConfig::feature_defaults();
  rl.iterations = cfg.rl_iterations;
  rl.boundary = cfg.boundary;
  result.deconvolved_features = stage("feature deconvolution", [&] { return rl_features(features, k, rl); });

  GeneratorConfig gcfg = cfg.generator;
  gcfg.seed = cfg.seed;
  gcfg.in_channels = result.deconvolved_features.channels();
  GeneratorNet net = stage("generator init", [&] { return init_generator(gcfg); });
  result.param_count = net.param_count();

  const int unit = 1 << gcfg.depth;
  const int h = y.height();
  const int w = y.width();
  const int ph = (h + unit - 1) / unit * unit;
  const int pw = (w + unit - 1) / unit * unit;
  const Tensor input = pad_bottom_right(result.deconvolved_features, ph, pw, BoundaryMode::Replicate);

  NAdamState opt;
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.T));
  stage("optimization", [&] {
    for (int t = 1; t <= cfg.T; ++t) {
      ad::Tape tape;
      ad::Var x = ad::crop(net.forward(tape, input), h, w);
      ad::LossParts parts;
      ad::Var loss = ad::total_loss(x, k, y, cfg.weights, cfg.microscopy_mode, &parts, {}, cfg.boundary);
      const double value = loss.item();
      const double lr = lr_at(cfg.schedule, t);
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss at iteration " << t << " (lr " << lr << ", data " << parts.data << ", hessian "
            << parts.hessian << ", sparsity " << parts.sparsity << ", output range [" << x.value().min() << ", "
            << x.value().max() << "], last finite loss "
            << (result.loss_trace.empty() ? std::nan("") : result.loss_trace.back()) << ")";
        throw Error(ErrorKind::Internal, msg.str());
      }
      net.params().zero_grad();
      tape.backward(loss);
      nadam_step(opt, net.params(), lr);
      result.loss_trace.push_back(value);
      if (on_iteration) on_iteration({t, lr, value, parts});
    }
    return 0;
  });

  ad::Tape tape;
  result.image = ad::crop(net.forward(tape, input), h, w).value();
  return result;
}

// ---------------------------------------------------------------- simulate

void DegradationSpec::validate() const {
  if (noise == Noise::Gaussian && !(sigma >= 0.0)) throw Error(ErrorKind::Config, "noise sigma must be >= 0");
  if (noise == Noise::Poisson && !(peak > 0.0)) throw Error(ErrorKind::Config, "Poisson peak must be > 0");
}

Image simulate_blur(const Image& x, const DegradationSpec& spec, std::uint64_t seed) {
  spec.validate();
  Image y = conv2d_same(x, spec.kernel, BoundaryMode::Replicate);
  auto rng = make_stream(seed, "noise");
  switch (spec.noise) {
    case DegradationSpec::Noise::None:
      break;
    case DegradationSpec::Noise::Gaussian:
      if (spec.sigma > 0.0) {
        for (real& v : y.data()) v = static_cast<real>(v + spec.sigma * rng.normal());
      }
      break;
    case DegradationSpec::Noise::Poisson:
      for (real& v : y.data()) {
        const double mean = std::max(0.0, static_cast<double>(v)) * spec.peak;
        v = static_cast<real>(static_cast<double>(rng.poisson(mean)) / spec.peak);
      }
      break;
  }
  for (real& v : y.data()) v = std::clamp<real>(v, 0, 1);
  return y;
}

// --------------------------------------------------------------- benchmark

namespace {

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              std::initializer_list<const char*> extensions) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::Usage, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    for (const char* want : extensions)
      if (ext == want) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Image crop_border(const Image& img, int c) {
  if (c == 0 || 2 * c >= img.height() || 2 * c >= img.width()) return img;
  Image out(1, img.height() - 2 * c, img.width() - 2 * c);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out(y, x) = img(y + c, x + c);
  return out;
}

json means_json(const BenchmarkMeans& m) {
  return {{"name", m.name},
          {"count", m.count},
          {"psnr_input", m.psnr_input},
          {"ssim_input", m.ssim_input},
          {"psnr_rl_baseline", m.psnr_rl_baseline},
          {"ssim_rl_baseline", m.ssim_rl_baseline},
          {"psnr_cider", m.psnr_cider},
          {"ssim_cider", m.ssim_cider}};
}

}  // namespace

BenchmarkMeans mean_of(const std::string& name, const std::vector<const BenchmarkRecord*>& records) {
  BenchmarkMeans m;
  m.name = name;
  for (const BenchmarkRecord* r : records) {
    if (!r->error.empty()) continue;
    ++m.count;
    m.psnr_input += r->psnr_input;
    m.ssim_input += r->ssim_input;
    m.psnr_rl_baseline += r->psnr_rl_baseline;
    m.ssim_rl_baseline += r->ssim_rl_baseline;
    m.psnr_cider += r->psnr_cider;
    m.ssim_cider += r->ssim_cider;
  }
  if (m.count > 0) {
    const double n = static_cast<double>(m.count);
    for (double* v : {&m.psnr_input, &m.ssim_input, &m.psnr_rl_baseline, &m.ssim_rl_baseline, &m.psnr_cider,
                      &m.ssim_cider})
      *v /= n;
  }
  return m;
}

json BenchmarkReport::to_json() const {
  json recs = json::array();
  for (const auto& r : records) {
    json j = {{"name", r.name},
              {"kernel_id", r.kernel_id},
              {"psnr_input", r.psnr_input},
              {"ssim_input", r.ssim_input},
              {"psnr_rl_baseline", r.psnr_rl_baseline},
              {"ssim_rl_baseline", r.ssim_rl_baseline},
              {"psnr_cider", r.psnr_cider},
              {"ssim_cider", r.ssim_cider},
              {"wall_seconds", r.wall_seconds},
              {"config_hash", r.config_hash}};
    if (!r.error.empty()) j["error"] = r.error;
    recs.push_back(std::move(j));
  }
  json per = json::array();
  for (const auto& m : per_image) per.push_back(means_json(m));
  return {{"config_hash", config_hash}, {"records", recs}, {"per_image", per}, {"grand_mean", means_json(grand_mean)}};
}

BenchmarkReport benchmark(const std::filesystem::path& dataset, const std::filesystem::path& kernels,
                          const RestoreConfig& cfg, const BenchmarkOptions& opts) {
  cfg.validate();
  const auto images = list_files(dataset, {".png", ".pfm"});
  const auto kernel_files = list_files(kernels, {".txt"});
  if (images.empty()) throw Error(ErrorKind::Usage, "no sharp images (.png/.pfm) in " + dataset.string());
  if (kernel_files.empty()) throw Error(ErrorKind::Usage, "no kernels (.txt) in " + kernels.string());

  BenchmarkReport report;
  report.config_hash = cfg.hash();
  for (const auto& img : images)
    for (const auto& ker : kernel_files) {
      BenchmarkRecord r;
      r.name = img.stem().string();
      r.kernel_id = ker.stem().string();
      r.config_hash = report.config_hash;
      report.records.push_back(std::move(r));
    }

  auto run_one = [&](std::size_t index) {
    BenchmarkRecord& r = report.records[index];
    const auto& img_path = images[index / kernel_files.size()];
    const auto& ker_path = kernel_files[index % kernel_files.size()];
    const auto start = std::chrono::steady_clock::now();
    try {
      const Image sharp = io::read_image(img_path);
      if (sharp.channels() != 1) throw Error(ErrorKind::Input, "benchmark images must be grayscale");
      DegradationSpec spec;
      spec.kernel = io::read_kernel(ker_path);
      spec.kernel_path = ker_path;
      spec.noise = opts.noise;
      spec.sigma = opts.sigma;
      spec.peak = opts.peak;
      const Image blurred = simulate_blur(sharp, spec, cfg.seed + index);
      RLConfig rl;
      rl.iterations = opts.rl_baseline_iterations;
      rl.boundary = cfg.boundary;
      const Image baseline = rl_image(blurred, spec.kernel, rl);
      const Image restored = restore(blurred, spec.kernel, cfg).image;
      const int c = cfg.metric_crop;
      const Image gt = crop_border(sharp, c);
      auto clamp01 = [](Image im) {
        for (real& v : im.data()) v = std::clamp<real>(v, 0, 1);
        return im;
      };
      const Image b = crop_border(blurred, c);
      const Image rb = clamp01(crop_border(baseline, c));
      const Image rc = crop_border(restored, c);
      r.psnr_input = psnr(b, gt);
      r.ssim_input = ssim(b, gt);
      r.psnr_rl_baseline = psnr(rb, gt);
      r.ssim_rl_baseline = ssim(rb, gt);
      r.psnr_cider = psnr(rc, gt);
      r.ssim_cider = ssim(rc, gt);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const std::size_t total = report.records.size();
  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(total)));
  if (workers == 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
  } else {
    // Each worker owns whole jobs; records are written into their own slots,
    // so the report does not depend on scheduling.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < total; i = next++) run_one(i);
      });
    for (auto& t : pool) t.join();
  }

  for (const auto& img : images) {
    std::vector<const BenchmarkRecord*> rs;
    for (const auto& r : report.records)
      if (r.name == img.stem().string()) rs.push_back(&r);
    report.per_image.push_back(mean_of(img.stem().string(), rs));
  }
  std::vector<const BenchmarkRecord*> all;
  for (const auto& r : report.records) all.push_back(&r);
  report.grand_mean = mean_of("all", all);
  return report;
}

}  // namespace cider
