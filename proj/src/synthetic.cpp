// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "cider/error.hpp"
#include "cider/rng.hpp"

namespace cider::synthetic {

Image test_chart(int size) {
  Image img(1, size, size, 0.1f);
  const double s = size / 128.0;
  auto rect = [&](double y0, double x0, double y1, double x1, double v) {
    for (int y = static_cast<int>(y0 * s); y < static_cast<int>(y1 * s); ++y)
      for (int x = static_cast<int>(x0 * s); x < static_cast<int>(x1 * s); ++x) img(y, x) = static_cast<real>(v);
  };
  // Bar groups of decreasing period.
  const int periods[] = {12, 8, 6, 4};
  double x0 = 6;
  for (int p : periods) {
    for (int k = 0; k < 3; ++k) rect(6, x0 + k * p, 46, x0 + k * p + p / 2.0, 0.9);
    x0 += 3 * p + 6;
  }
  // Discs of different radii.
  const double discs[][3] = {{72, 22, 14}, {72, 56, 9}, {66, 82, 5}, {84, 84, 3}};
  for (const auto& d : discs) {
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double dy = y - d[0] * s;
        const double dx = x - d[1] * s;
        if (dy * dy + dx * dx <= d[2] * d[2] * s * s) img(y, x) = 0.75f;
      }
  }
  // Horizontal ramp band.
  for (int y = static_cast<int>(96 * s); y < static_cast<int>(106 * s); ++y)
    for (int x = static_cast<int>(6 * s); x < static_cast<int>(122 * s); ++x)
      img(y, x) = static_cast<real>(0.1 + 0.8 * (x - 6 * s) / (116 * s));
  // Checker blocks.
  for (int by = 0; by < 3; ++by)
    for (int bx = 0; bx < 3; ++bx)
      if ((by + bx) % 2 == 0) rect(56 + by * 8, 100 + bx * 8, 64 + by * 8, 108 + bx * 8, 0.6);
  rect(112, 10, 122, 60, 0.5);
  rect(114, 70, 120, 120, 0.85);
  return img;
}

Kernel motion_kernel(int size, std::uint64_t seed) {
  auto rng = make_stream(seed, "motion_kernel");
  std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);
  const double c = (size - 1) / 2.0;
  double y = c;
  double x = c;
  double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  const double span = 0.4 * size;
  const int steps = 4 * size;
  double vy = std::sin(angle);
  double vx = std::cos(angle);
  // Random walk with inertia, re-centred afterwards by shifting the mass.
  std::vector<std::pair<double, double>> path;
  for (int i = 0; i < steps; ++i) {
    path.emplace_back(y, x);
    angle += rng.uniform(-0.35, 0.35);
    vy = 0.8 * vy + 0.2 * std::sin(angle);
    vx = 0.8 * vx + 0.2 * std::cos(angle);
    const double n = std::hypot(vy, vx) + 1e-12;
    y += 0.5 * vy / n * span / size * 2.0;
    x += 0.5 * vx / n * span / size * 2.0;
  }
  double my = 0.0;
  double mx = 0.0;
  for (const auto& [py, px] : path) {
    my += py;
    mx += px;
  }
  my /= static_cast<double>(path.size());
  mx /= static_cast<double>(path.size());
  for (const auto& [py, px] : path) {
    const double ty = std::clamp(py - my + c, 0.0, size - 1.0);
    const double tx = std::clamp(px - mx + c, 0.0, size - 1.0);
    const int iy = static_cast<int>(ty);
    const int ix = static_cast<int>(tx);
    const double fy = ty - iy;
    const double fx = tx - ix;
    auto splat = [&](int yy, int xx, double v) {
      if (yy < size && xx < size) w[static_cast<std::size_t>(yy) * size + xx] += v;
    };
    splat(iy, ix, (1 - fy) * (1 - fx));
    splat(iy + 1, ix, fy * (1 - fx));
    splat(iy, ix + 1, (1 - fy) * fx);
    splat(iy + 1, ix + 1, fy * fx);
  }
  std::vector<real> out(w.begin(), w.end());
  return Kernel::from_weights(size, size, std::move(out));
}

Image smooth_field(int size, double amplitude, std::uint64_t seed) {
  auto rng = make_stream(seed, "smooth_field");
  Image img(1, size, size);
  for (int h = 0; h < 4; ++h) {
    const double cy = rng.uniform(0.0, size);
    const double cx = rng.uniform(0.0, size);
    const double sig = rng.uniform(0.25, 0.5) * size;
    const double a = rng.uniform(0.5, 1.0);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        img(y, x) += static_cast<real>(a * std::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (2 * sig * sig)));
  }
  const double peak = img.max();
  for (real& v : img.data()) v = static_cast<real>(v / peak * amplitude);
  return img;
}

SpotsScene spots_on_background(int size, int spot_count, double spot_amplitude, double background_amplitude,
                               std::uint64_t seed) {
  SpotsScene scene;
  scene.spot_amplitude = spot_amplitude;
  scene.background_amplitude = background_amplitude;
  scene.background = smooth_field(size, background_amplitude, seed);
  scene.spots = Image(1, size, size);
  auto rng = make_stream(seed, "spots");
  constexpr double sigma = 1.5;
  const int margin = 8;
  if (size <= 2 * margin) throw Error(ErrorKind::Config, "spots scene needs size > " + std::to_string(2 * margin));
  for (int attempt = 0; static_cast<int>(scene.centers.size()) < spot_count; ++attempt) {
    if (attempt == 1000 * spot_count) {
      throw Error(ErrorKind::Config, "cannot place " + std::to_string(spot_count) + " separated spots in a " +
                                         std::to_string(size) + " px scene");
    }
    Spot s{margin + static_cast<int>(rng() % static_cast<std::uint64_t>(size - 2 * margin)),
           margin + static_cast<int>(rng() % static_cast<std::uint64_t>(size - 2 * margin))};
    const bool crowded = std::any_of(scene.centers.begin(), scene.centers.end(), [&](const Spot& o) {
      return std::abs(o.y - s.y) < 10 && std::abs(o.x - s.x) < 10;
    });
    if (!crowded) scene.centers.push_back(s);
  }
  for (const Spot& s : scene.centers)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double d2 = (y - s.y) * (y - s.y) + (x - s.x) * (x - s.x);
        scene.spots(y, x) += static_cast<real>(spot_amplitude * std::exp(-d2 / (2 * sigma * sigma)));
      }
  scene.image = Image(1, size, size);
  scene.spot_free_mask = Image(1, size, size);
  for (std::size_t i = 0; i < scene.image.size(); ++i) {
    scene.image[i] = scene.background[i] + scene.spots[i];
    scene.spot_free_mask[i] = scene.spots[i] < 1e-3 ? 1 : 0;
  }
  return scene;
}

}  // namespace cider::synthetic
