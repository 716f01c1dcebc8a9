// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels against the OpenMP/GEMM versions used at runtime.
// Set OMP_NUM_THREADS to compare scaling.

#include <benchmark/benchmark.h>

#include <vector>

#include "conv_gemm.hpp"
#include "cider/kernels.hpp"
#include "cider/reference.hpp"
#include "cider/rng.hpp"
#include "cider/tensor.hpp"

namespace {

using namespace cider;

Tensor noise(int c, int h, int w, std::uint64_t seed) {
  auto rng = make_stream(seed, "bench");
  Tensor t(c, h, w);
  for (real& v : t.data()) v = static_cast<real>(rng.uniform(0.0, 1.0));
  return t;
}

Kernel blur_kernel(int size) { return Kernel::gaussian(size, size / 4.0); }

// Arg 0: image side, arg 1: kernel side. 16 channels, like the feature stack.
void BM_ConvReference(benchmark::State& st) {
  const Tensor img = noise(16, st.range(0), st.range(0), 1);
  const Kernel k = blur_kernel(st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv2d_same(img, k.filter(), BoundaryMode::Replicate));
  st.SetItemsProcessed(st.iterations() * img.size());
}

void BM_ConvParallel(benchmark::State& st) {
  const Tensor img = noise(16, st.range(0), st.range(0), 1);
  const Kernel k = blur_kernel(st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(conv2d_same(img, k, BoundaryMode::Replicate));
  st.SetItemsProcessed(st.iterations() * img.size());
}

void BM_AdjointReference(benchmark::State& st) {
  const Tensor img = noise(16, st.range(0), st.range(0), 2);
  const Kernel k = blur_kernel(st.range(1));
  for (auto _ : st)
    benchmark::DoNotOptimize(reference::conv2d_same_adjoint(img, k.filter(), BoundaryMode::Replicate));
  st.SetItemsProcessed(st.iterations() * img.size());
}

void BM_AdjointParallel(benchmark::State& st) {
  const Tensor img = noise(16, st.range(0), st.range(0), 2);
  const Kernel k = blur_kernel(st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(conv2d_same_adjoint(img, k.filter(), BoundaryMode::Replicate));
  st.SetItemsProcessed(st.iterations() * img.size());
}

// Learnable 3x3 layer. Arg 0: side, arg 1: channels in and out.
struct Layer {
  Tensor x, weight;
  std::vector<real> bias;
  detail::ConvGeometry g;

  explicit Layer(const benchmark::State& st) {
    const int side = static_cast<int>(st.range(0));
    const int ch = static_cast<int>(st.range(1));
    x = noise(ch, side, side, 3);
    weight = noise(ch, ch, 9, 4);
    bias.assign(ch, real(0.1));
    g = {ch, ch, 3, 1, side, side};
  }
};

void BM_LayerReference(benchmark::State& st) {
  const Layer l(st);
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv_layer(l.x, l.weight, 3, l.bias, 1));
}

void BM_LayerGemm(benchmark::State& st) {
  const Layer l(st);
  std::vector<real> cols;
  Tensor out(l.g.out_channels, l.g.out_height(), l.g.out_width());
  for (auto _ : st) {
    detail::im2col(l.x, l.g, cols);
    detail::gemm_forward(l.weight.data().data(), cols.data(), l.bias, l.g, out.data().data());
    benchmark::DoNotOptimize(out.data().data());
  }
}

}  // namespace

BENCHMARK(BM_ConvReference)->Args({128, 7})->Args({256, 15})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvParallel)->Args({128, 7})->Args({256, 15})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdjointReference)->Args({128, 7})->Args({256, 15})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdjointParallel)->Args({128, 7})->Args({256, 15})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LayerReference)->Args({64, 32})->Args({128, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LayerGemm)->Args({64, 32})->Args({128, 64})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
