// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cider/error.hpp"
#include "cider/kernels.hpp"
#include "cider/losses.hpp"
#include "cider/rng.hpp"
#include "cider/synthetic.hpp"
#include "helpers.hpp"

using namespace cider;
using ad::Tape;

namespace {

double eval(const std::function<ad::Var(Tape&)>& f) {
  Tape t;
  return f(t).item();
}

}  // namespace

TEST_CASE("ssim: identity, symmetry, closed form") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Image a = testing::random_tensor({1, 20, 23}, seed);
    const Image b = testing::random_tensor({1, 20, 23}, seed + 10);
    CHECK(ssim(a, a) == 1.0);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-7);
    CHECK(ssim(a, b) <= 1.0);
    CHECK(ssim(a, b) >= -1.0);
  }
  const Image c2(1, 16, 16, 0.2f), c6(1, 16, 16, 0.6f);
  // zero variance: luminance term only, contrast/structure term is C2/C2
  const double expect = (2 * 0.2 * 0.6 + 1e-4) / (0.04 + 0.36 + 1e-4);
  CHECK(ssim(c2, c6) == doctest::Approx(expect).epsilon(1e-6));
  CHECK_THROWS_AS(ssim(c2, Image(1, 16, 15)), Error);
}

TEST_CASE("ssim: loop oracle") {
  const Image x = testing::random_tensor({1, 8, 8}, 3);
  Image y = x;
  for (real& v : y.data()) v = std::min(v + 0.5f, 1.0f);
  CHECK(std::abs(ssim(x, y) - oracle::ssim(oracle::from_tensor(x), oracle::from_tensor(y))) <= 1e-5);

  const Image p = testing::random_tensor({1, 30, 17}, 4);
  const Image q = testing::random_tensor({1, 30, 17}, 5);
  CHECK(std::abs(ssim(p, q) - oracle::ssim(oracle::from_tensor(p), oracle::from_tensor(q))) <= 1e-5);

  // the differentiable index agrees with the metric
  CHECK(std::abs(eval([&](Tape& t) { return ad::ssim_index(t.constant(p), q); }) - ssim(p, q)) <= 1e-6);
}

TEST_CASE("psnr") {
  const Image a = testing::random_tensor({1, 10, 10}, 6);
  CHECK(psnr(a, a) == kPsnrCap);
  Image b = a;
  for (real& v : b.data()) v += 0.1f;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
  const Image c = testing::random_tensor({1, 10, 10}, 7);
  CHECK(std::abs(psnr(a, c) - oracle::psnr(oracle::from_tensor(a), oracle::from_tensor(c))) <= 1e-6);
  CHECK_THROWS_AS(psnr(a, Image(1, 9, 10)), Error);
}

TEST_CASE("loss_ssim") {
  const Kernel k = Kernel::gaussian(5, 1.0);
  const Image x = testing::random_tensor({1, 24, 24}, 8);
  const Image y = conv2d_same(x, k, BoundaryMode::Replicate);
  CHECK(std::abs(eval([&](Tape& t) { return ad::loss_ssim(t.constant(x), k, y); })) <= 1e-7);

  // more noise on the reblurred image, larger loss
  double prev = -1;
  for (double sigma : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    auto rng = make_stream(9, "noise");
    Image noisy = y;
    for (real& v : noisy.data()) v += static_cast<real>(sigma * rng.normal());
    const double l = eval([&](Tape& t) { return ad::loss_ssim(t.constant(x), k, noisy); });
    CHECK(l > prev);
    prev = l;
  }
}

TEST_CASE("hessian prior") {
  auto h = [](const Image& z) { return eval([&](Tape& t) { return ad::hessian_reg(t.constant(z)); }); };
  CHECK(h(Image(1, 7, 7, 0.3f)) == 0.0);
  Image ramp(1, 9, 6), sq(1, 5, 5);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 6; ++j) ramp(i, j) = static_cast<real>(0.25 * i - 0.5 * j + 2);
  CHECK(h(ramp) == 0.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) sq(i, j) = static_cast<real>(j * j);
  CHECK(h(sq) == 30.0);
  CHECK(hessian_value(sq) == 30.0);

  const Image z = testing::random_tensor({1, 13, 11}, 10);
  CHECK(std::abs(h(z) - oracle::hessian(oracle::from_tensor(z))) <= 1e-5);
  Image shifted = z;
  for (real& v : shifted.data()) v += 0.25f;
  CHECK(std::abs(h(shifted) - h(z)) <= 1e-5);
}

TEST_CASE("sparsity prior") {
  auto s = [](const Image& x) { return eval([&](Tape& t) { return ad::sparsity_l1(t.constant(x)); }); };
  CHECK(s(Image(1, 4, 4)) == 0.0);
  CHECK(s(Image(1, 4, 4, 0.5f)) == 8.0);
  const Image r = testing::random_tensor({1, 9, 9}, 11, -1, 1);
  double loop = 0;
  for (real v : r.data()) loop += std::abs(static_cast<double>(v));
  CHECK(std::abs(s(r) - loop) <= 1e-5);
}

TEST_CASE("total loss") {
  const Kernel k = Kernel::gaussian(5, 1.0);
  const Image x = testing::random_tensor({1, 16, 16}, 12);
  const Image y = testing::random_tensor({1, 16, 16}, 13);
  auto total = [&](LossWeights w, bool micro, ad::LossParts* parts = nullptr) {
    return eval([&](Tape& t) { return ad::total_loss(t.constant(x), k, y, w, micro, parts); });
  };

  LossWeights zero{0, 0, 0};
  CHECK(total(zero, true) == 0.0);

  LossWeights a;
  LossWeights b = a;
  b.beta = 0.7;
  CHECK(total(a, false) == total(b, false));
  CHECK(total(a, true) != total(b, true));

  // hand-combined component oracles
  const double data = 1 - oracle::ssim(oracle::from_tensor(conv2d_same(x, k, BoundaryMode::Replicate)),
                                       oracle::from_tensor(y));
  const double hess = oracle::hessian(oracle::from_tensor(x));
  LossWeights raw{1.0, 0.01, 0.0, false};
  CHECK(std::abs(total(raw, false) - (data + 0.01 * hess)) <= 1e-5);
  LossWeights per_pixel{1.0, 0.01, 0.0, true};
  CHECK(std::abs(total(per_pixel, false) - (data + 0.01 * hess / 256)) <= 1e-5);

  ad::LossParts parts;
  LossWeights all{0.5, 0.02, 0.03, true};
  const double v = total(all, true, &parts);
  CHECK(std::abs(parts.data - data) <= 1e-5);
  CHECK(std::abs(parts.hessian - hess) <= 1e-4);
  CHECK(parts.sparsity == doctest::Approx(x.sum()).epsilon(1e-6));
  CHECK(v == doctest::Approx(0.5 * parts.data + (0.02 * parts.hessian + 0.03 * parts.sparsity) / 256).epsilon(1e-9));

  CHECK_THROWS_AS((LossWeights{-1, 0, 0}.validate()), Error);
}

TEST_CASE("total loss is non-negative over the synthetic corpus") {
  const Kernel kernels[] = {Kernel::gaussian(15, 2.0), synthetic::motion_kernel(15, 1), Kernel::delta()};
  const Image scenes[] = {synthetic::test_chart(64), synthetic::smooth_field(64, 0.8, 2),
                          testing::random_tensor({1, 64, 64}, 14)};
  for (const auto& k : kernels)
    for (const auto& xs : scenes)
      for (const auto& ys : scenes) {
        const double l = eval([&](Tape& t) { return ad::total_loss(t.constant(xs), k, ys, LossWeights{}, true); });
        CHECK(l >= 0.0);
      }
}
