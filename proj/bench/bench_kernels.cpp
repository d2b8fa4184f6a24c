// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels vs. the blocked OpenMP kernels, on the shapes the
// detector actually runs (batch 64, Table-sized layers).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "codeshield/kernels.hpp"

namespace ks = codeshield::kernels;

namespace {

std::vector<float> random_buffer(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

template <bool Reference>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  auto a = random_buffer(m * k, 1);
  auto b = random_buffer(k * n, 2);
  std::vector<float> c(m * n);
  ks::ConstMatrixRef<float> av(a.data(), m, k);
  ks::ConstMatrixRef<float> bv(b.data(), k, n);
  ks::MatrixRef<float> cv(c.data(), m, n);
  for (auto _ : state) {
    if constexpr (Reference) {
      ks::reference::gemm(av, ks::Op::none, bv, ks::Op::none, cv);
    } else {
      ks::gemm(av, ks::Op::none, bv, ks::Op::none, cv);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(
      2.0 * static_cast<double>(m * n * k), benchmark::Counter::kIsIterationInvariantRate,
      benchmark::Counter::kIs1000);
}

template <bool Reference>
void BM_Im2Col(benchmark::State& state) {
  const std::size_t batch = 64;
  const auto length = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  auto in = random_buffer(batch * length * channels, 3);
  std::vector<float> cols(batch * length * channels * 3);
  for (auto _ : state) {
    if constexpr (Reference) {
      ks::reference::im2col_k3<float>(in, batch, length, channels, cols);
    } else {
      ks::im2col_k3<float>(in, batch, length, channels, cols);
    }
    benchmark::DoNotOptimize(cols.data());
  }
}

}  // namespace

// GRU recurrent step, GRU input projection, first dense layer, conv block 5.
BENCHMARK(BM_Gemm<true>)->Args({64, 768, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gemm<false>)
    ->Args({64, 768, 256})
    ->Args({2176, 768, 256})
    ->Args({64, 1024, 256})
    ->Args({4352, 256, 384})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Im2Col<true>)->Args({137, 64});
BENCHMARK(BM_Im2Col<false>)->Args({137, 64});

BENCHMARK_MAIN();
