// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <limits>

#include "cider/error.hpp"
#include "cider/features.hpp"
#include "cider/kernels.hpp"
#include "cider/losses.hpp"
#include "cider/richardson_lucy.hpp"
#include "cider/synthetic.hpp"
#include "helpers.hpp"

using namespace cider;

namespace {

Kernel box3() { return Kernel::from_weights(3, 3, std::vector<real>(9, 1.0f)); }

RLConfig iters(int n, RLConfig::Init init = RLConfig::Init::Observed) {
  RLConfig c;
  c.iterations = n;
  c.init = init;
  return c;
}

// Rescales an image so its min is exactly the positify floor and its max is 1;
// positify is then the identity map.
Image normalized(Image y) {
  const double lo = y.min(), hi = y.max();
  const double eps = FeatureNormalization::kFloor;
  for (real& v : y.data()) v = static_cast<real>(eps + (v - lo) * (1 - eps) / (hi - lo));
  return y;
}

}  // namespace

TEST_CASE("matches the loop oracle on small instances") {
  const Image y = testing::random_tensor({1, 5, 5}, 1, 0.05, 1.0);
  const auto ref = oracle::richardson_lucy(oracle::from_tensor(y), oracle::filter_grid(box3().filter()), 10);
  CHECK(testing::max_abs_diff(ref, rl_image(y, box3(), iters(10))) <= 1e-5);

  for (std::uint64_t seed = 2; seed < 6; ++seed) {
    const Image z = testing::random_tensor({1, 8, 7}, seed, 0.05, 1.0);
    const Kernel k = testing::random_kernel(3, 5, seed);
    const auto r = oracle::richardson_lucy(oracle::from_tensor(z), oracle::filter_grid(k.filter()), 10);
    CHECK(testing::max_abs_diff(r, rl_image(z, k, iters(10))) <= 1e-5);
  }
}

TEST_CASE("delta kernel: identity after one step, any init") {
  const Image y = testing::random_tensor({1, 16, 16}, 7);
  for (auto init : {RLConfig::Init::Observed, RLConfig::Init::Constant}) {
    CHECK(testing::max_abs_diff(rl_image(y, Kernel::delta(), iters(1, init)), y) <= 1e-6);
  }
}

TEST_CASE("fixed points") {
  const Image c(1, 20, 20, 0.4f);
  const Kernel k = testing::random_kernel(5, 5, 8);
  Image x = c;
  for (int i = 0; i < 5; ++i) {
    x = rl_step(x, c, k);
    for (real v : x.data()) REQUIRE(std::abs(v - 0.4) <= 1e-6);
  }

  // conv(x, k) == y exactly leaves x unchanged
  const Image x0 = testing::random_tensor({1, 24, 24}, 9, 0.1, 1.0);
  const Image y = conv2d_same(x0, k, BoundaryMode::Replicate);
  CHECK(testing::max_abs_diff(rl_step(x0, y, k), x0) <= 1e-6);
}

TEST_CASE("non-negativity and intensity drift") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Image y = testing::random_tensor({1, 32, 32}, seed);
    for (std::size_t i = 0; i < y.size(); i += 7) y[i] = 0;  // zeros are allowed
    const Kernel k = testing::random_kernel(7, 5, seed);
    Image x = y;
    for (int i = 0; i < 10; ++i) {
      const double before = x.sum();
      x = rl_step(x, y, k);
      for (real v : x.data()) REQUIRE(v >= 0);
      CHECK(std::abs(x.sum() - before) <= 0.005 * before);
    }
  }
}

TEST_CASE("noiseless blur: early iterations improve, 100 iterations gain 5 dB") {
  const Image truth = synthetic::test_chart(128);
  const Kernel k = Kernel::gaussian(7, 1.0);
  const Image y = conv2d_same(truth, k, BoundaryMode::Replicate);
  const double base = psnr(y, truth);

  Image x = y;
  double prev = base;
  for (int i = 1; i <= 20; ++i) {
    x = rl_step(x, y, k);
    const double p = psnr(x, truth);
    INFO("iteration " << i);
    CHECK(p >= prev - 0.05);
    prev = p;
  }
  const double gain = psnr(rl_image(y, k, iters(100)), truth) - base;
  INFO("gain " << gain << " dB");
  CHECK(gain >= 5.0);
}

TEST_CASE("input validation") {
  auto kind = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Internal;
  };
  Image neg = testing::random_tensor({1, 8, 8}, 1);
  neg[5] = -0.01f;
  CHECK(kind([&] { rl_image(neg, box3()); }) == ErrorKind::Input);
  Image nan = testing::random_tensor({1, 8, 8}, 1);
  nan[3] = std::numeric_limits<real>::quiet_NaN();
  CHECK(kind([&] { rl_image(nan, box3()); }) == ErrorKind::Input);
  CHECK(kind([&] { rl_image(testing::random_tensor({1, 8, 8}, 2), box3(), iters(0)); }) == ErrorKind::Config);
  RLConfig bad;
  bad.denom_floor = 0;
  CHECK(kind([&] { rl_image(testing::random_tensor({1, 8, 8}, 2), box3(), bad); }) == ErrorKind::Config);
}

TEST_CASE("feature RL: identity stack reduces to image RL") {
  const Kernel k = Kernel::gaussian(7, 1.5);
  const Image y = normalized(conv2d_same(synthetic::test_chart(64), k, BoundaryMode::Replicate));
  const Tensor stack = extract_features(y, analytic_bank()).slice(0);  // the delta filter
  REQUIRE(testing::max_abs_diff(stack, y) == 0.0);
  const RLConfig cfg = RLConfig::feature_defaults();
  CHECK(testing::max_abs_diff(rl_features(stack, k, cfg), rl_image(y, k, cfg)) <= 1e-5);

  // any range: image RL on the positified channel, mapped back
  const Image raw = testing::random_tensor({1, 32, 32}, 3, -1.0, 2.0);
  auto [p, norm] = positify(raw);
  const Tensor expect = depositify(rl_image(p, k, cfg), norm);
  CHECK(testing::max_abs_diff(rl_features(raw, k, cfg), expect) <= 1e-5);
}

TEST_CASE("feature RL: delta kernel leaves the stack unchanged") {
  const Tensor s = extract_features(testing::random_tensor({1, 24, 24}, 4), analytic_bank());
  CHECK(testing::max_abs_diff(rl_features(s, Kernel::delta()), s) <= 1e-5);
}

TEST_CASE("feature RL: every channel matches the loop oracle") {
  const Kernel k = Kernel::gaussian(5, 1.0);
  const Image y = conv2d_same(synthetic::test_chart(32), k, BoundaryMode::Replicate);
  const Tensor s = extract_features(y, analytic_bank());
  const Tensor out = rl_features(s, k);
  REQUIRE(out.channels() == kFeatureChannels);
  auto [p, norm] = positify(s);
  for (int c = 0; c < kFeatureChannels; ++c) {
    const auto r = oracle::richardson_lucy(oracle::from_tensor(p, c), oracle::filter_grid(k.filter()), 30);
    const auto& a = norm.channels[c];
    double err = 0;
    for (int i = 0; i < 32 * 32; ++i) {
      const double back = a.constant ? a.constant_value + (r.v[i] - 0.5) : (r.v[i] - a.offset) / a.scale;
      err = std::max(err, std::abs(back - out.channel(c)[i]) * a.scale);  // compare in normalized units
    }
    INFO("channel " << c);
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("feature RL: thread count does not change the result") {
  const Tensor s = extract_features(testing::random_tensor({1, 40, 40}, 5), analytic_bank());
  const Kernel k = testing::random_kernel(5, 5, 5);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const Tensor a = rl_features(s, k);
  omp_set_num_threads(4);
  const Tensor b = rl_features(s, k);
  omp_set_num_threads(saved);
  CHECK(testing::max_abs_diff(a, b) == 0.0);
}
