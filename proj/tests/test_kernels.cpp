// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "codeshield/kernels.hpp"

namespace ck = codeshield::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Gemm, MatchesReferenceForEveryTransposeCombination) {
  std::mt19937_64 rng(11);
  for (auto [m, n, k] : {std::tuple{1, 1, 1}, {7, 5, 3}, {64, 33, 129}, {130, 70, 9}}) {
    for (auto op_a : {ck::Op::none, ck::Op::transpose})
      for (auto op_b : {ck::Op::none, ck::Op::transpose}) {
        const std::size_t ar = op_a == ck::Op::none ? m : k, ac = op_a == ck::Op::none ? k : m;
        const std::size_t br = op_b == ck::Op::none ? k : n, bc = op_b == ck::Op::none ? n : k;
        auto a = random_vector(ar * ac, rng), b = random_vector(br * bc, rng);
        auto c0 = random_vector(static_cast<std::size_t>(m) * n, rng), c1 = c0;
        ck::gemm<double>({a.data(), ar, ac}, op_a, {b.data(), br, bc}, op_b,
                         {c0.data(), static_cast<std::size_t>(m), static_cast<std::size_t>(n)}, 0.5, 2.0);
        ck::reference::gemm<double>({a.data(), ar, ac}, op_a, {b.data(), br, bc}, op_b,
                                    {c1.data(), static_cast<std::size_t>(m), static_cast<std::size_t>(n)}, 0.5, 2.0);
        for (std::size_t i = 0; i < c0.size(); ++i) ASSERT_NEAR(c0[i], c1[i], 1e-10);
      }
  }
}

TEST(Gemm, ResultIndependentOfThreadCount) {
  std::mt19937_64 rng(5);
  std::vector<float> a(97 * 61), b(61 * 45);
  std::uniform_real_distribution<float> u(-1, 1);
  for (auto& x : a) x = u(rng);
  for (auto& x : b) x = u(rng);
  std::vector<float> c1(97 * 45), c4(97 * 45);
  ck::set_max_threads(1);
  ck::gemm<float>({a.data(), 97, 61}, ck::Op::none, {b.data(), 61, 45}, ck::Op::none, {c1.data(), 97, 45});
  ck::set_max_threads(4);
  ck::gemm<float>({a.data(), 97, 61}, ck::Op::none, {b.data(), 61, 45}, ck::Op::none, {c4.data(), 97, 45});
  ck::set_max_threads(0);
  EXPECT_EQ(c1, c4);
}

TEST(Im2col, MatchesReferenceAndIsAdjointOfCol2im) {
  std::mt19937_64 rng(3);
  const std::size_t batch = 3, length = 9, channels = 4;
  auto x = random_vector(batch * length * channels, rng);
  std::vector<double> cols(batch * length * 3 * channels), ref(cols.size());
  ck::im2col_k3<double>(x, batch, length, channels, cols);
  ck::reference::im2col_k3<double>(x, batch, length, channels, ref);
  EXPECT_EQ(cols, ref);

  // <im2col(x), y> == <x, col2im(y)>
  auto y = random_vector(cols.size(), rng);
  std::vector<double> back(x.size()), back_ref(x.size());
  ck::col2im_k3<double>(y, batch, length, channels, back);
  ck::reference::col2im_k3<double>(y, batch, length, channels, back_ref);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += cols[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
  EXPECT_NEAR(lhs, rhs, 1e-10);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], back_ref[i], 1e-12);
}

TEST(Maxpool, OddLengthFloorsAndRoutesGradientToWinner) {
  // batch 1, length 5, channels 1 -> 2 outputs; the last element is dropped
  std::vector<double> in = {1, 4, 3, 2, 9}, out(2);
  std::vector<std::size_t> arg(2);
  ck::maxpool2<double>(in, 1, 5, 1, out, arg);
  EXPECT_EQ(out, (std::vector<double>{4, 3}));
  EXPECT_EQ(arg, (std::vector<std::size_t>{1, 2}));
  std::vector<double> g(5, -1.0);
  ck::maxpool2_backward<double>(std::vector<double>{10, 20}, arg, g);
  EXPECT_EQ(g, (std::vector<double>{0, 10, 20, 0, 0}));
}

TEST(Maxpool, MatchesReference) {
  std::mt19937_64 rng(8);
  const std::size_t batch = 2, length = 11, channels = 3;
  auto x = random_vector(batch * length * channels, rng);
  const std::size_t out_n = batch * (length / 2) * channels;
  std::vector<double> o1(out_n), o2(out_n);
  std::vector<std::size_t> a1(out_n), a2(out_n);
  ck::maxpool2<double>(x, batch, length, channels, o1, a1);
  ck::reference::maxpool2<double>(x, batch, length, channels, o2, a2);
  EXPECT_EQ(o1, o2);
  EXPECT_EQ(a1, a2);
}
