// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense numeric kernels used by the detector network.
//
// Every kernel exists twice: a straightforward serial version in
// `kernels::reference` that the tests treat as ground truth, and a blocked,
// OpenMP-parallel version in `kernels`. Parallel kernels only split work over
// independent output elements, so their results do not depend on the thread
// count.

#pragma once

#include <cstddef>
#include <span>

namespace codeshield::kernels {

/// Row-major matrix view. `stride` is the distance between rows.
template <typename T>
struct MatrixRef {
  T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  MatrixRef() = default;
  MatrixRef(T* d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c), stride(c) {}
  MatrixRef(T* d, std::size_t r, std::size_t c, std::size_t s)
      : data(d), rows(r), cols(c), stride(s) {}

  T& operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
};

template <typename T>
using ConstMatrixRef = MatrixRef<const T>;

enum class Op { none, transpose };

// C = alpha * op(A) * op(B) + beta * C
template <typename T>
void gemm(ConstMatrixRef<T> a, Op op_a, ConstMatrixRef<T> b, Op op_b, MatrixRef<T> c,
          T alpha = T(1), T beta = T(0));

// Channels-last im2col for a width-3, pad-1, stride-1 convolution.
// input: [batch][length][channels]  ->  cols: [batch*length][3*channels]
template <typename T>
void im2col_k3(std::span<const T> input, std::size_t batch, std::size_t length,
               std::size_t channels, std::span<T> cols);

// Adjoint of im2col_k3: accumulates column gradients back into the input
// gradient (which is overwritten).
template <typename T>
void col2im_k3(std::span<const T> cols, std::size_t batch, std::size_t length,
               std::size_t channels, std::span<T> input_grad);

// Max pooling with window 2, stride 2 over the length axis (floor division).
// argmax receives, for every output element, the flat index of the winning
// input element.
template <typename T>
void maxpool2(std::span<const T> input, std::size_t batch, std::size_t length,
              std::size_t channels, std::span<T> output, std::span<std::size_t> argmax);

template <typename T>
void maxpool2_backward(std::span<const T> output_grad, std::span<const std::size_t> argmax,
                       std::span<T> input_grad);

namespace reference {

template <typename T>
void gemm(ConstMatrixRef<T> a, Op op_a, ConstMatrixRef<T> b, Op op_b, MatrixRef<T> c,
          T alpha = T(1), T beta = T(0));

template <typename T>
void im2col_k3(std::span<const T> input, std::size_t batch, std::size_t length,
               std::size_t channels, std::span<T> cols);

template <typename T>
void col2im_k3(std::span<const T> cols, std::size_t batch, std::size_t length,
               std::size_t channels, std::span<T> input_grad);

template <typename T>
void maxpool2(std::span<const T> input, std::size_t batch, std::size_t length,
              std::size_t channels, std::span<T> output, std::span<std::size_t> argmax);

template <typename T>
void maxpool2_backward(std::span<const T> output_grad, std::span<const std::size_t> argmax,
                       std::span<T> input_grad);

}  // namespace reference

/// Number of worker threads the parallel kernels may use (0 = runtime default).
void set_max_threads(int threads);
int max_threads();

}  // namespace codeshield::kernels
