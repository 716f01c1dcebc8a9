// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one "Cn PASS|FAIL|SKIP ..." line per criterion and
// exits non-zero if any criterion fails. Tolerances are the constants below.
//
//   acceptance                 CI mode (T = 600 end-to-end runs)
//   acceptance --full          default T for the end-to-end and determinism runs
//   acceptance --only C4,C7    a subset
//   acceptance --dataset DIR --kernels DIR
//                              also run the optional benchmark reproduction

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cider/background.hpp"
#include "cider/features.hpp"
#include "cider/generator.hpp"
#include "cider/io.hpp"
#include "cider/kernels.hpp"
#include "cider/losses.hpp"
#include "cider/pipeline.hpp"
#include "cider/richardson_lucy.hpp"
#include "cider/synthetic.hpp"
#include "cider/wavelet.hpp"
#include "helpers.hpp"

using namespace cider;
namespace fs = std::filesystem;

namespace {

// C2
constexpr double kConvTol = 1e-6;
constexpr double kRLTol = 1e-5;
constexpr double kSSIMTol = 1e-5;
constexpr double kPSNRTol = 1e-5;  // dB
// C3
constexpr double kWaveletTol = 1e-5;
// C4
constexpr double kDeltaTol = 1e-6;
constexpr double kRLGainDb = 5.0;
constexpr int kRLIterations = 100;
// C5
constexpr double kReductionTol = 1e-5;
// C6
constexpr std::size_t kParamLow = 250'000;
constexpr std::size_t kParamHigh = 400'000;
constexpr std::size_t kReferenceParams = 2'357'345;
// C7
constexpr int kCiT = 600;
constexpr double kCiMarginRL = 0.01, kCiMarginBlurred = 0.02;
constexpr double kFullMarginRL = 0.02, kFullMarginBlurred = 0.05;
constexpr double kFullBudgetSeconds = 30 * 60;
// C8
constexpr double kBenchMarginRL = 0.02;
constexpr double kBenchStretchSSIM = 0.85, kBenchStretchPSNR = 29.0;
// C10
constexpr double kMedianFraction = 0.10;
constexpr double kPeakFraction = 0.90;

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Options {
  bool full = false;
  std::set<std::string> only;
  std::string dataset, kernels;
};

struct Run {
  int code = -1;
  std::string out;
};

Run run_command(const std::string& cmd) {
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Image clamp01(Image im) {
  for (real& v : im.data()) v = std::clamp<real>(v, 0, 1);
  return im;
}

// ------------------------------------------------------------------ C1

Outcome gradients(const Options&) {
  const Run r = run_command(std::string(CIDER_GRADIENTS_PATH) + " 2>&1");
  const std::string prefix_pass = "C1 PASS ", prefix_fail = "C1 FAIL ";
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind(prefix_pass, 0) == 0) return check(r.code == 0, line.substr(prefix_pass.size()));
    if (line.rfind(prefix_fail, 0) == 0) return check(false, line.substr(prefix_fail.size()));
  }
  return check(false, "gradient helper produced no verdict (exit " + std::to_string(r.code) + ")");
}

// ------------------------------------------------------------------ C2

Outcome oracles(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  double conv_err = 0, rl_err = 0, ssim_err = 0, psnr_err = 0;
  int instances = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto rng = make_stream(seed, "acceptance-c2");
    const int h = 3 + static_cast<int>(rng() % 6);
    const int w = 3 + static_cast<int>(rng() % 6);
    const int kh = 1 + 2 * static_cast<int>(rng() % 3);
    const int kw = 1 + 2 * static_cast<int>(rng() % 3);
    const Image x = testing::random_tensor({1, h, w}, seed, 0.05, 1.0);
    const Image z = testing::random_tensor({1, h, w}, seed + 100, 0.05, 1.0);
    const Kernel k = testing::random_kernel(kh, kw, seed);
    const auto gx = oracle::from_tensor(x);
    const auto gk = oracle::filter_grid(k.filter());
    for (auto mode : {BoundaryMode::Replicate, BoundaryMode::Reflect, BoundaryMode::Circular}) {
      conv_err = std::max(conv_err, testing::max_abs_diff(oracle::conv(gx, gk, mode), conv2d_same(x, k, mode)));
      conv_err =
          std::max(conv_err, testing::max_abs_diff(oracle::correlate(gx, gk, mode), correlate2d_same(x, k, mode)));
    }
    RLConfig rl;
    rl.iterations = 10;
    rl_err = std::max(rl_err, testing::max_abs_diff(oracle::richardson_lucy(gx, gk, 10), rl_image(x, k, rl)));
    ssim_err = std::max(ssim_err, std::abs(ssim(x, z) - oracle::ssim(gx, oracle::from_tensor(z))));
    psnr_err = std::max(psnr_err, std::abs(psnr(x, z) - oracle::psnr(gx, oracle::from_tensor(z))));
    ++instances;
  }
  const bool ok = conv_err <= kConvTol && rl_err <= kRLTol && ssim_err <= kSSIMTol && psnr_err <= kPSNRTol;
  return check(ok, fmt("oracle equivalences on %d instances <= 8x8: conv/correlate %.1e <= %.0e, RL %.1e <= %.0e, "
                       "SSIM %.1e <= %.0e, PSNR %.1e dB <= %.0e, %.2f s",
                       instances, conv_err, kConvTol, rl_err, kRLTol, ssim_err, kSSIMTol, psnr_err, kPSNRTol,
                       seconds_since(t0)));
}

// ------------------------------------------------------------------ C3

Outcome wavelet(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  const int sizes[][2] = {{64, 64}, {96, 80}, {127, 130}, {256, 256}, {200, 333}, {512, 512}};
  double worst = 0;
  int runs = 0;
  std::uint64_t seed = 1;
  for (const auto& hw : sizes) {
    const Image x = testing::random_tensor({1, hw[0], hw[1]}, seed++);
    for (int levels = 1; levels <= 7; ++levels, ++runs)
      worst = std::max(worst, testing::max_abs_diff(idwt2(dwt2(x, levels)), x));
  }
  return check(worst <= kWaveletTol, fmt("wavelet round trip: max abs error %.1e <= %.0e over %d runs "
                                         "(64-512 px, 1-7 levels), %.2f s",
                                         worst, kWaveletTol, runs, seconds_since(t0)));
}

// ------------------------------------------------------------------ C4

Outcome rl_behaviour(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  double delta_err = 0;
  for (auto init : {RLConfig::Init::Observed, RLConfig::Init::Constant}) {
    RLConfig one;
    one.iterations = 1;
    one.init = init;
    const Image y = testing::random_tensor({1, 32, 32}, 4);
    delta_err = std::max(delta_err, testing::max_abs_diff(rl_image(y, Kernel::delta(), one), y));
  }
  const Image truth = synthetic::test_chart(128);
  const Kernel k = Kernel::gaussian(7, 1.0);
  const Image y = conv2d_same(truth, k, BoundaryMode::Replicate);
  RLConfig rl;
  rl.iterations = kRLIterations;
  const double base = psnr(y, truth);
  const double gain = psnr(rl_image(y, k, rl), truth) - base;
  const double secs = seconds_since(t0);
  return check(delta_err <= kDeltaTol && gain >= kRLGainDb && secs < 60,
               fmt("RL: delta one-step error %.1e <= %.0e; Gaussian sigma 1 (7x7) on 128 px chart, %d iterations "
                   "gain %+.2f dB >= %.0f dB (%.2f -> %.2f); %.1f s",
                   delta_err, kDeltaTol, kRLIterations, gain, kRLGainDb, base, base + gain, secs));
}

// ------------------------------------------------------------------ C5

Outcome reduction(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  const Kernel k = Kernel::gaussian(7, 1.5);
  // Scale to [floor, 1] so the per-channel normalization is the identity.
  Image y = conv2d_same(synthetic::test_chart(64), k, BoundaryMode::Replicate);
  const double lo = y.min(), hi = y.max(), eps = FeatureNormalization::kFloor;
  for (real& v : y.data()) v = static_cast<real>(eps + (v - lo) * (1 - eps) / (hi - lo));
  const Tensor stack = extract_features(y, analytic_bank()).slice(0);
  const RLConfig cfg = RLConfig::feature_defaults();
  const double stack_err = testing::max_abs_diff(stack, y);
  const double err = testing::max_abs_diff(rl_features(stack, k, cfg), rl_image(y, k, cfg));
  return check(stack_err == 0 && err <= kReductionTol,
               fmt("identity-filter stack: rl_features vs rl_image max abs %.1e <= %.0e (%d iterations), %.2f s", err,
                   kReductionTol, cfg.iterations, seconds_since(t0)));
}

// ------------------------------------------------------------------ C6

Outcome model_size(const Options&) {
  const std::size_t n = generator_param_count(GeneratorConfig{});
  const double ratio = static_cast<double>(kReferenceParams) / static_cast<double>(n);
  return check(n >= kParamLow && n <= kParamHigh && ratio > 5.0,
               fmt("default generator has %zu learnable parameters, in [%zu, %zu]; %.2fx smaller than %zu", n,
                   kParamLow, kParamHigh, ratio, kReferenceParams));
}

// ------------------------------------------------------------------ C7

Outcome end_to_end(const Options& o) {
  const int T = o.full ? RestoreConfig{}.T : kCiT;
  const double margin_rl = o.full ? kFullMarginRL : kCiMarginRL;
  const double margin_blur = o.full ? kFullMarginBlurred : kCiMarginBlurred;
  struct Fixture {
    const char* name;
    Kernel kernel;
  };
  const Fixture fixtures[] = {{"gaussian15-s2", Kernel::gaussian(15, 2.0)},
                              {"motion15-a", synthetic::motion_kernel(15, 1)},
                              {"motion15-b", synthetic::motion_kernel(15, 2)}};
  const Image truth = synthetic::test_chart(128);
  bool ok = true;
  std::string detail = fmt("T=%d, margins +%.2f over RL-50 and +%.2f over blurred:", T, margin_rl, margin_blur);
  for (const auto& f : fixtures) {
    DegradationSpec spec;
    spec.kernel = f.kernel;
    spec.noise = DegradationSpec::Noise::Gaussian;
    spec.sigma = 0.01;
    const Image y = simulate_blur(truth, spec, 1);
    RLConfig rl;
    rl.iterations = 50;
    const double s_blur = ssim(y, truth);
    const double s_rl = ssim(clamp01(rl_image(y, f.kernel, rl)), truth);
    RestoreConfig cfg;
    cfg.T = T;
    const auto t0 = std::chrono::steady_clock::now();
    const RestoreResult r = restore(y, f.kernel, cfg);
    const double secs = seconds_since(t0);
    const double s_cider = ssim(r.image, truth);
    const bool this_ok = s_cider >= s_rl + margin_rl && s_cider >= s_blur + margin_blur &&
                         (!o.full || secs <= kFullBudgetSeconds);
    ok = ok && this_ok;
    std::fprintf(stderr, "  C7 %-14s blurred %.4f  RL-50 %.4f  CiDeR %.4f  PSNR %.2f dB  %.0f s  %s\n", f.name,
                 s_blur, s_rl, s_cider, psnr(r.image, truth), secs, this_ok ? "ok" : "below margin");
    detail += fmt(" %s %.4f vs RL %.4f / blurred %.4f (%.0f s);", f.name, s_cider, s_rl, s_blur, secs);
  }
  detail.pop_back();
  return check(ok, "end-to-end SSIM on 3 fixtures, " + detail);
}

// ------------------------------------------------------------------ C8

Outcome bench_reproduction(const Options& o) {
  if (o.dataset.empty() || o.kernels.empty()) {
    return {Verdict::Skip, "benchmark reproduction: no dataset supplied (--dataset, --kernels)"};
  }
  RestoreConfig cfg;
  if (!o.full) cfg.T = kCiT;
  const BenchmarkReport r = benchmark(o.dataset, o.kernels, cfg);
  std::printf("  %-12s %8s %8s %8s %8s %8s %8s\n", "image", "PSNR in", "SSIM in", "PSNR RL", "SSIM RL", "PSNR",
              "SSIM");
  auto row = [](const BenchmarkMeans& m) {
    std::printf("  %-12s %8.2f %8.4f %8.2f %8.4f %8.2f %8.4f\n", m.name.c_str(), m.psnr_input, m.ssim_input,
                m.psnr_rl_baseline, m.ssim_rl_baseline, m.psnr_cider, m.ssim_cider);
  };
  for (const auto& m : r.per_image) row(m);
  row(r.grand_mean);
  const auto& g = r.grand_mean;
  std::size_t failed = 0;
  for (const auto& rec : r.records) failed += !rec.error.empty();
  const bool ok = failed == 0 && g.count > 0 && g.ssim_cider >= g.ssim_rl_baseline + kBenchMarginRL;
  return check(ok, fmt("benchmark over %zu pairs (T=%d): SSIM %.4f vs RL %.4f + %.2f; stretch SSIM >= %.2f %s, "
                       "PSNR >= %.1f dB %s (%.2f dB); %zu failed",
                       g.count, cfg.T, g.ssim_cider, g.ssim_rl_baseline, kBenchMarginRL, kBenchStretchSSIM,
                       g.ssim_cider >= kBenchStretchSSIM ? "met" : "not met", kBenchStretchPSNR,
                       g.psnr_cider >= kBenchStretchPSNR ? "met" : "not met", g.psnr_cider, failed));
}

// ------------------------------------------------------------------ C9

Outcome determinism(const Options& o) {
  const fs::path dir = testing::scratch("acceptance-c9");
  const Image truth = synthetic::test_chart(64);
  DegradationSpec spec;
  spec.kernel = synthetic::motion_kernel(9, 3);
  spec.noise = DegradationSpec::Noise::Gaussian;
  spec.sigma = 0.01;
  io::write_image(dir / "blurred.pfm", simulate_blur(truth, spec, 5));
  io::write_kernel(dir / "kernel.txt", spec.kernel);
  std::string cmd = std::string(CIDER_CLI_PATH) + " deconvolve --input " + (dir / "blurred.pfm").string() +
                    " --kernel " + (dir / "kernel.txt").string() + " --output " + (dir / "out.pfm").string() +
                    " --report " + (dir / "out.json").string() + " --seed 17";
  if (!o.full) cmd += " --iters " + std::to_string(kCiT);
  cmd += " 2>/dev/null";

  const auto t0 = std::chrono::steady_clock::now();
  std::string image[2], report[2];
  for (int i = 0; i < 2; ++i) {
    const Run r = run_command(cmd);
    if (r.code != 0) return check(false, fmt("deconvolve run %d exited with %d", i + 1, r.code));
    image[i] = io::read_file(dir / "out.pfm");
    auto j = nlohmann::json::parse(io::read_file(dir / "out.json"));
    j.erase("wall_seconds");
    report[i] = j.dump();
    fs::remove(dir / "out.pfm");
    fs::remove(dir / "out.json");
  }
  return check(image[0] == image[1] && report[0] == report[1],
               fmt("two CLI deconvolve runs (64 px, T=%s): image %s (%zu bytes), report %s; %.0f s",
                   o.full ? "default" : std::to_string(kCiT).c_str(), image[0] == image[1] ? "identical" : "DIFFERS",
                   image[0].size(), report[0] == report[1] ? "identical" : "DIFFERS", seconds_since(t0)));
}

// ------------------------------------------------------------------ C10

Outcome background(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scene = synthetic::spots_on_background(128, 24, 1.0, 0.2, 7);
  const Image out = subtract_background(scene.image, estimate_background(scene.image).background);
  std::vector<real> free;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (scene.spot_free_mask[i] > 0) free.push_back(out[i]);
  std::nth_element(free.begin(), free.begin() + free.size() / 2, free.end());
  const double median = free.empty() ? 1e9 : free[free.size() / 2];
  double worst_keep = 1e9;
  for (const auto& c : scene.centers) {
    const double height = scene.image(c.y, c.x) - scene.background(c.y, c.x);
    worst_keep = std::min(worst_keep, out(c.y, c.x) / height);
  }
  return check(median <= kMedianFraction * scene.background_amplitude && worst_keep >= kPeakFraction,
               fmt("background removal on %zu spots: spot-free median %.4f <= %.2f x %.2f, weakest peak keeps "
                   "%.1f%% >= %.0f%%, %.2f s",
                   scene.centers.size(), median, kMedianFraction, scene.background_amplitude, 100 * worst_keep,
                   100 * kPeakFraction, seconds_since(t0)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  Options o;
  std::string only;
  app.add_flag("--full", o.full, "default T instead of the CI setting");
  app.add_option("--only", only, "comma-separated criteria, e.g. C1,C7");
  app.add_option("--dataset", o.dataset, "directory of sharp benchmark images");
  app.add_option("--kernels", o.kernels, "directory of benchmark kernels");
  CLI11_PARSE(app, argc, argv);
  for (std::stringstream ss(only); ss.good();) {
    std::string item;
    std::getline(ss, item, ',');
    if (!item.empty()) o.only.insert(item);
  }

  const std::vector<std::pair<std::string, std::function<Outcome(const Options&)>>> criteria = {
      {"C1", gradients}, {"C2", oracles},   {"C3", wavelet},     {"C4", rl_behaviour}, {"C5", reduction},
      {"C6", model_size}, {"C7", end_to_end}, {"C8", bench_reproduction}, {"C9", determinism}, {"C10", background},
  };
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!o.only.empty() && !o.only.count(id)) continue;
    Outcome r;
    try {
      r = fn(o);
    } catch (const std::exception& e) {
      r = {Verdict::Fail, std::string("threw: ") + e.what()};
    }
    const char* tag = r.verdict == Verdict::Pass ? "PASS" : (r.verdict == Verdict::Fail ? "FAIL" : "SKIP");
    failures += r.verdict == Verdict::Fail;
    std::printf("%s %s %s\n", id.c_str(), tag, r.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
