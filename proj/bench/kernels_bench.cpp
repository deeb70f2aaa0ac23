// SPDX-License-Identifier: Apache-2.0
// Serial reference vs OpenMP kernels at encoder-sized shapes.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sentemb/kernels.hpp"

namespace {

using sentemb::Real;
namespace k = sentemb::kernels;

std::vector<Real> filled(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-1, 1);
  std::vector<Real> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Rows = batch x tokens, square weight of width H.
template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0)), h = static_cast<std::size_t>(state.range(1));
  const auto a = filled(m * h, 1), b = filled(h * h, 2);
  std::vector<Real> c(m * h);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::gemm(k::Trans::no, k::Trans::no, m, h, h, a, b, c);
    else
      k::serial::gemm(k::Trans::no, k::Trans::no, m, h, h, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * h * h));
}

// Attention scores: per head, [T,d] x [d,T].
template <bool Parallel>
void BM_BatchedGemm(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0)), t = static_cast<std::size_t>(state.range(1));
  const std::size_t d = 32;
  const auto q = filled(count * t * d, 3), kk = filled(count * t * d, 4);
  std::vector<Real> s(count * t * t);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::batched_gemm(k::Trans::no, k::Trans::yes, count, t, t, d, q, kk, s);
    else
      k::serial::batched_gemm(k::Trans::no, k::Trans::yes, count, t, t, d, q, kk, s);
    benchmark::DoNotOptimize(s.data());
  }
}

// CNN head forward: im2col then gemm against [3C, C].
template <bool Parallel>
void BM_Conv(benchmark::State& state) {
  const std::size_t batch = 32, t = static_cast<std::size_t>(state.range(0)), c = static_cast<std::size_t>(state.range(1));
  const std::size_t width = 3;
  const auto x = filled(batch * t * c, 5), w = filled(width * c * c, 6);
  std::vector<Real> cols(batch * t * width * c), y(batch * t * c);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::im2col(batch, t, c, width, x, cols);
      k::gemm(k::Trans::no, k::Trans::no, batch * t, c, width * c, cols, w, y);
    } else {
      k::serial::im2col(batch, t, c, width, x, cols);
      k::serial::gemm(k::Trans::no, k::Trans::no, batch * t, c, width * c, cols, w, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_LayerNorm(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0)), h = static_cast<std::size_t>(state.range(1));
  const auto x = filled(rows * h, 7), g = filled(h, 8), b = filled(h, 9);
  std::vector<Real> y(rows * h), xhat(rows * h), inv(rows);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::layer_norm(rows, h, x, g, b, Real(1e-12), y, xhat, inv);
    else
      k::serial::layer_norm(rows, h, x, g, b, Real(1e-12), y, xhat, inv);
    benchmark::DoNotOptimize(y.data());
  }
}

BENCHMARK_TEMPLATE(BM_Gemm, false)->Args({512, 64})->Args({2048, 128});
BENCHMARK_TEMPLATE(BM_Gemm, true)->Args({512, 64})->Args({2048, 128});
BENCHMARK_TEMPLATE(BM_BatchedGemm, false)->Args({64, 16})->Args({128, 64});
BENCHMARK_TEMPLATE(BM_BatchedGemm, true)->Args({64, 16})->Args({128, 64});
BENCHMARK_TEMPLATE(BM_Conv, false)->Args({16, 64})->Args({64, 128});
BENCHMARK_TEMPLATE(BM_Conv, true)->Args({16, 64})->Args({64, 128});
BENCHMARK_TEMPLATE(BM_LayerNorm, false)->Args({2048, 128});
BENCHMARK_TEMPLATE(BM_LayerNorm, true)->Args({2048, 128});

}  // namespace

BENCHMARK_MAIN();
