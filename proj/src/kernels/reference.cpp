// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/kernels.hpp"

#include <cassert>
#include <limits>

namespace codeshield::kernels::reference {

namespace {

template <typename T>
T at(ConstMatrixRef<T> m, Op op, std::size_t r, std::size_t c) {
  return op == Op::none ? m(r, c) : m(c, r);
}

}  // namespace

template <typename T>
void gemm(ConstMatrixRef<T> a, Op op_a, ConstMatrixRef<T> b, Op op_b, MatrixRef<T> c, T alpha,
          T beta) {
  const std::size_t m = c.rows;
  const std::size_t n = c.cols;
  const std::size_t k = op_a == Op::none ? a.cols : a.rows;
  assert((op_b == Op::none ? b.rows : b.cols) == k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += at(a, op_a, i, p) * at(b, op_b, p, j);
      c(i, j) = beta == T(0) ? alpha * acc : alpha * acc + beta * c(i, j);
    }
  }
}

template <typename T>
void im2col_k3(std::span<const T> input, std::size_t batch, std::size_t length,
               std::size_t channels, std::span<T> cols) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < length; ++l) {
      T* row = cols.data() + (b * length + l) * 3 * channels;
      for (std::size_t tap = 0; tap < 3; ++tap) {
        const long src = static_cast<long>(l) + static_cast<long>(tap) - 1;
        for (std::size_t ch = 0; ch < channels; ++ch) {
          row[tap * channels + ch] =
              (src < 0 || src >= static_cast<long>(length))
                  ? T(0)
                  : input[(b * length + static_cast<std::size_t>(src)) * channels + ch];
        }
      }
    }
  }
}

template <typename T>
void col2im_k3(std::span<const T> cols, std::size_t batch, std::size_t length,
               std::size_t channels, std::span<T> input_grad) {
  for (auto& g : input_grad) g = T(0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < length; ++l) {
      const T* row = cols.data() + (b * length + l) * 3 * channels;
      for (std::size_t tap = 0; tap < 3; ++tap) {
        const long src = static_cast<long>(l) + static_cast<long>(tap) - 1;
        if (src < 0 || src >= static_cast<long>(length)) continue;
        for (std::size_t ch = 0; ch < channels; ++ch)
          input_grad[(b * length + static_cast<std::size_t>(src)) * channels + ch] +=
              row[tap * channels + ch];
      }
    }
  }
}

template <typename T>
void maxpool2(std::span<const T> input, std::size_t batch, std::size_t length,
              std::size_t channels, std::span<T> output, std::span<std::size_t> argmax) {
  const std::size_t out_len = length / 2;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t l = 0; l < out_len; ++l)
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const std::size_t i0 = (b * length + 2 * l) * channels + ch;
        const std::size_t i1 = i0 + channels;
        const std::size_t o = (b * out_len + l) * channels + ch;
        // first element wins ties
        const bool second = input[i1] > input[i0];
        output[o] = second ? input[i1] : input[i0];
        argmax[o] = second ? i1 : i0;
      }
}

template <typename T>
void maxpool2_backward(std::span<const T> output_grad, std::span<const std::size_t> argmax,
                       std::span<T> input_grad) {
  for (auto& g : input_grad) g = T(0);
  for (std::size_t o = 0; o < output_grad.size(); ++o) input_grad[argmax[o]] += output_grad[o];
}

#define CODESHIELD_INSTANTIATE(T)                                                            \
  template void gemm<T>(ConstMatrixRef<T>, Op, ConstMatrixRef<T>, Op, MatrixRef<T>, T, T);  \
  template void im2col_k3<T>(std::span<const T>, std::size_t, std::size_t, std::size_t,     \
                             std::span<T>);                                                 \
  template void col2im_k3<T>(std::span<const T>, std::size_t, std::size_t, std::size_t,     \
                             std::span<T>);                                                 \
  template void maxpool2<T>(std::span<const T>, std::size_t, std::size_t, std::size_t,      \
                            std::span<T>, std::span<std::size_t>);                          \
  template void maxpool2_backward<T>(std::span<const T>, std::span<const std::size_t>,      \
                                     std::span<T>);

CODESHIELD_INSTANTIATE(float)
CODESHIELD_INSTANTIATE(double)
#undef CODESHIELD_INSTANTIATE

}  // namespace codeshield::kernels::reference
