// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace codeshield::kernels {

namespace {

int g_max_threads = 0;

int thread_count() {
#if defined(_OPENMP)
  return g_max_threads > 0 ? g_max_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

// Register tile. NR spans two 64-byte vectors.
template <typename T>
struct Tile {
  static constexpr std::size_t mr = 6;
  static constexpr std::size_t nr = 128 / sizeof(T);
};

constexpr std::size_t kBlockK = 256;
constexpr std::size_t kBlockM = 72;

template <typename T>
T element(ConstMatrixRef<T> m, Op op, std::size_t r, std::size_t c) {
  return op == Op::none ? m.data[r * m.stride + c] : m.data[c * m.stride + r];
}

// Packs op(B)[k0:k0+kc, :] into NR-wide column panels, zero padded.
template <typename T>
void pack_b(ConstMatrixRef<T> b, Op op_b, std::size_t k0, std::size_t kc, std::size_t n,
            T* out) {
  constexpr std::size_t nr = Tile<T>::nr;
  const std::size_t panels = (n + nr - 1) / nr;
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (panels > 4)
  for (std::size_t jp = 0; jp < panels; ++jp) {
    T* dst = out + jp * kc * nr;
    const std::size_t j0 = jp * nr;
    const std::size_t width = std::min(nr, n - j0);
    for (std::size_t p = 0; p < kc; ++p) {
      T* row = dst + p * nr;
      if (op_b == Op::none) {
        const T* src = b.data + (k0 + p) * b.stride + j0;
        for (std::size_t j = 0; j < width; ++j) row[j] = src[j];
      } else {
        for (std::size_t j = 0; j < width; ++j) row[j] = b.data[(j0 + j) * b.stride + k0 + p];
      }
      for (std::size_t j = width; j < nr; ++j) row[j] = T(0);
    }
  }
}

template <typename T>
void pack_a(ConstMatrixRef<T> a, Op op_a, std::size_t i0, std::size_t mc, std::size_t k0,
            std::size_t kc, T* out) {
  constexpr std::size_t mr = Tile<T>::mr;
  const std::size_t panels = (mc + mr - 1) / mr;
  for (std::size_t ip = 0; ip < panels; ++ip) {
    T* dst = out + ip * kc * mr;
    const std::size_t r0 = i0 + ip * mr;
    const std::size_t height = std::min(mr, i0 + mc - r0);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < height; ++r) dst[p * mr + r] = element(a, op_a, r0 + r, k0 + p);
      for (std::size_t r = height; r < mr; ++r) dst[p * mr + r] = T(0);
    }
  }
}

template <typename T>
void micro_kernel(std::size_t kc, const T* __restrict ap, const T* __restrict bp, T* c,
                  std::size_t ldc, std::size_t rows, std::size_t cols, T alpha, T beta,
                  bool overwrite) {
  constexpr std::size_t mr = Tile<T>::mr;
  constexpr std::size_t nr = Tile<T>::nr;
  alignas(64) T acc[mr][nr] = {};
  for (std::size_t p = 0; p < kc; ++p) {
    const T* bv = bp + p * nr;
    const T* av = ap + p * mr;
#pragma GCC unroll 6
    for (std::size_t r = 0; r < mr; ++r) {
      const T ar = av[r];
#pragma omp simd
      for (std::size_t j = 0; j < nr; ++j) acc[r][j] += ar * bv[j];
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    T* crow = c + r * ldc;
    if (overwrite) {
      if (beta == T(0)) {
        for (std::size_t j = 0; j < cols; ++j) crow[j] = alpha * acc[r][j];
      } else {
        for (std::size_t j = 0; j < cols; ++j) crow[j] = alpha * acc[r][j] + beta * crow[j];
      }
    } else {
      for (std::size_t j = 0; j < cols; ++j) crow[j] += alpha * acc[r][j];
    }
  }
}

}  // namespace

void set_max_threads(int threads) { g_max_threads = threads; }
int max_threads() { return thread_count(); }

template <typename T>
void gemm(ConstMatrixRef<T> a, Op op_a, ConstMatrixRef<T> b, Op op_b, MatrixRef<T> c, T alpha,
          T beta) {
  constexpr std::size_t mr = Tile<T>::mr;
  constexpr std::size_t nr = Tile<T>::nr;
  const std::size_t m = c.rows;
  const std::size_t n = c.cols;
  const std::size_t k = op_a == Op::none ? a.cols : a.rows;
  assert((op_a == Op::none ? a.rows : a.cols) == m);
  assert((op_b == Op::none ? b.rows : b.cols) == k);
  assert((op_b == Op::none ? b.cols : b.rows) == n);
  if (m == 0 || n == 0) return;
  if (k == 0) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c(i, j) = beta == T(0) ? T(0) : beta * c(i, j);
    return;
  }

  const std::size_t n_panels = (n + nr - 1) / nr;
  std::vector<T> packed_b(kBlockK * n_panels * nr);
  const std::size_t m_blocks = (m + kBlockM - 1) / kBlockM;

  for (std::size_t k0 = 0; k0 < k; k0 += kBlockK) {
    const std::size_t kc = std::min(kBlockK, k - k0);
    const bool first = k0 == 0;
    pack_b(b, op_b, k0, kc, n, packed_b.data());

#pragma omp parallel num_threads(thread_count()) if (m_blocks > 1)
    {
      std::vector<T> packed_a(kBlockM * kc + mr * kc);
#pragma omp for schedule(static)
      for (std::size_t mb = 0; mb < m_blocks; ++mb) {
        const std::size_t i0 = mb * kBlockM;
        const std::size_t mc = std::min(kBlockM, m - i0);
        pack_a(a, op_a, i0, mc, k0, kc, packed_a.data());
        for (std::size_t jp = 0; jp < n_panels; ++jp) {
          const std::size_t j0 = jp * nr;
          const std::size_t cols = std::min(nr, n - j0);
          for (std::size_t ip = 0; ip * mr < mc; ++ip) {
            const std::size_t r0 = i0 + ip * mr;
            const std::size_t rows = std::min(mr, i0 + mc - r0);
            micro_kernel(kc, packed_a.data() + ip * kc * mr, packed_b.data() + jp * kc * nr,
                         c.data + r0 * c.stride + j0, c.stride, rows, cols, alpha, beta, first);
          }
        }
      }
    }
  }
}

template <typename T>
void im2col_k3(std::span<const T> input, std::size_t batch, std::size_t length,
               std::size_t channels, std::span<T> cols) {
  const std::size_t rows = batch * length;
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (rows * channels > 32768)
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t l = row % length;
    T* dst = cols.data() + row * 3 * channels;
    const T* centre = input.data() + row * channels;
    if (l == 0) {
      std::fill(dst, dst + channels, T(0));
    } else {
      std::copy(centre - channels, centre, dst);
    }
    std::copy(centre, centre + channels, dst + channels);
    if (l + 1 == length) {
      std::fill(dst + 2 * channels, dst + 3 * channels, T(0));
    } else {
      std::copy(centre + channels, centre + 2 * channels, dst + 2 * channels);
    }
  }
}

template <typename T>
void col2im_k3(std::span<const T> cols, std::size_t batch, std::size_t length,
               std::size_t channels, std::span<T> input_grad) {
  const std::size_t rows = batch * length;
  // Gather form: each input position sums its three contributing taps, so
  // rows can be processed independently.
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (rows * channels > 32768)
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t l = row % length;
    T* dst = input_grad.data() + row * channels;
    const T* own = cols.data() + row * 3 * channels + channels;  // tap 1 of this row
    for (std::size_t ch = 0; ch < channels; ++ch) dst[ch] = own[ch];
    if (l + 1 < length) {
      const T* next = cols.data() + (row + 1) * 3 * channels;  // tap 0 of next row
      for (std::size_t ch = 0; ch < channels; ++ch) dst[ch] += next[ch];
    }
    if (l > 0) {
      const T* prev = cols.data() + (row - 1) * 3 * channels + 2 * channels;  // tap 2
      for (std::size_t ch = 0; ch < channels; ++ch) dst[ch] += prev[ch];
    }
  }
}

template <typename T>
void maxpool2(std::span<const T> input, std::size_t batch, std::size_t length,
              std::size_t channels, std::span<T> output, std::span<std::size_t> argmax) {
  const std::size_t out_len = length / 2;
  const std::size_t rows = batch * out_len;
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (rows * channels > 32768)
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t b = row / out_len;
    const std::size_t l = row % out_len;
    const std::size_t base0 = (b * length + 2 * l) * channels;
    const std::size_t base1 = base0 + channels;
    const std::size_t o = row * channels;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const bool second = input[base1 + ch] > input[base0 + ch];
      output[o + ch] = second ? input[base1 + ch] : input[base0 + ch];
      argmax[o + ch] = second ? base1 + ch : base0 + ch;
    }
  }
}

template <typename T>
void maxpool2_backward(std::span<const T> output_grad, std::span<const std::size_t> argmax,
                       std::span<T> input_grad) {
  std::fill(input_grad.begin(), input_grad.end(), T(0));
  // Windows do not overlap, so every input element receives at most one write.
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (output_grad.size() > 32768)
  for (std::size_t o = 0; o < output_grad.size(); ++o) input_grad[argmax[o]] = output_grad[o];
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

}  // namespace codeshield::kernels
