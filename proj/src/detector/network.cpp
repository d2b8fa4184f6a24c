// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "network.hpp"

#include <algorithm>
#include <cmath>

#include "codeshield/common.hpp"
#include "codeshield/kernels.hpp"

namespace codeshield::detail {

namespace {

using kernels::Op;

template <typename T>
kernels::ConstMatrixRef<T> cref(const T* data, std::size_t rows, std::size_t cols) {
  return {data, rows, cols};
}

template <typename T>
kernels::MatrixRef<T> ref(T* data, std::size_t rows, std::size_t cols) {
  return {data, rows, cols};
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Adds the column sums of m [rows][cols] into out.
template <typename T>
void add_column_sums(const T* m, std::size_t rows, std::size_t cols, T* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += m[r * cols + c];
}

double unit_uniform(std::uint64_t& state) {
  state = splitmix64(state);
  return static_cast<double>(state >> 11) * 0x1.0p-53;
}

}  // namespace

template <typename T>
const ParameterInfo& Network<T>::find(const std::vector<ParameterInfo>& layout,
                                      const std::string& name) {
  for (const auto& p : layout)
    if (p.name == name) return p;
  throw Error("detector layout has no parameter " + name);
}

template <typename T>
Network<T>::Network(const DetectorConfig& config, std::size_t input_length,
                    const std::vector<ParameterInfo>& layout)
    : config_(config), input_length_(input_length) {
  std::size_t len = input_length, ch = 1;
  for (std::size_t i = 0; i < config.conv_channels.size(); ++i) {
    const std::string p = "conv" + std::to_string(i);
    Conv c{len, ch, config.conv_channels[i], &find(layout, p + ".weight"),
           &find(layout, p + ".bias"), {}, {}, {}, {}};
    conv_.push_back(std::move(c));
    ch = config.conv_channels[i];
    len /= 2;
  }
  steps_ = len;
  std::size_t in = ch;
  for (std::size_t i = 0; i < config.gru_hidden.size(); ++i) {
    const std::string p = "gru" + std::to_string(i);
    Gru g;
    g.in = in;
    g.hidden = config.gru_hidden[i];
    g.w_ih = &find(layout, p + ".weight_ih");
    g.w_hh = &find(layout, p + ".weight_hh");
    g.b_ih = &find(layout, p + ".bias_ih");
    g.b_hh = &find(layout, p + ".bias_hh");
    gru_.push_back(std::move(g));
    in = config.gru_hidden[i];
  }
  for (std::size_t i = 0; i <= config.dense.size(); ++i) {
    const bool hidden = i < config.dense.size();
    const std::string p = hidden ? "dense" + std::to_string(i) : "output";
    Dense d;
    d.in = in;
    d.out = hidden ? config.dense[i] : 2;
    d.relu = hidden;
    d.w = &find(layout, p + ".weight");
    d.b = &find(layout, p + ".bias");
    in = d.out;
    dense_.push_back(std::move(d));
  }
}

template <typename T>
std::span<const T> Network<T>::forward(std::span<const T> params, std::span<const T> x,
                                       std::size_t batch, bool train,
                                       std::uint64_t dropout_seed) {
  const std::size_t B = batch;
  batch_ = B;
  input_.assign(x.begin(), x.end());

  // Convolution blocks, channels-last [B][L][C].
  const T* in = input_.data();
  for (auto& c : conv_) {
    const std::size_t L = c.in_len;
    c.cols.resize(B * L * 3 * c.in_ch);
    kernels::im2col_k3<T>({in, B * L * c.in_ch}, B, L, c.in_ch, c.cols);
    c.act.resize(B * L * c.out_ch);
    kernels::gemm<T>(cref<T>(c.cols.data(), B * L, 3 * c.in_ch), Op::none,
                     cref<T>(params.data() + c.w->offset, c.out_ch, 3 * c.in_ch), Op::transpose,
                     ref(c.act.data(), B * L, c.out_ch));
    const T* bias = params.data() + c.b->offset;
    for (std::size_t r = 0; r < B * L; ++r)
      for (std::size_t o = 0; o < c.out_ch; ++o) {
        T& v = c.act[r * c.out_ch + o];
        v = std::max(v + bias[o], T(0));
      }
    c.pooled.resize(B * (L / 2) * c.out_ch);
    c.argmax.resize(c.pooled.size());
    kernels::maxpool2<T>(c.act, B, L, c.out_ch, c.pooled, c.argmax);
    in = c.pooled.data();
  }

  // [B][S][C] -> time-major [S][B][C].
  const std::size_t S = steps_;
  const std::size_t C = conv_.back().out_ch;
  seq_.resize(S * B * C);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < S; ++t)
      std::copy_n(in + (b * S + t) * C, C, seq_.data() + (t * B + b) * C);

  std::vector<T> zeros, gh;
  const T* layer_in = seq_.data();
  for (auto& g : gru_) {
    const std::size_t H = g.hidden;
    g.gi.resize(S * B * 3 * H);
    kernels::gemm<T>(cref(layer_in, S * B, g.in), Op::none,
                     cref<T>(params.data() + g.w_ih->offset, 3 * H, g.in), Op::transpose,
                     ref(g.gi.data(), S * B, 3 * H));
    const T* b_ih = params.data() + g.b_ih->offset;
    const T* b_hh = params.data() + g.b_hh->offset;
    for (std::size_t r = 0; r < S * B; ++r)
      for (std::size_t k = 0; k < 3 * H; ++k) g.gi[r * 3 * H + k] += b_ih[k];
    for (auto* v : {&g.r, &g.z, &g.n, &g.hn, &g.out}) v->resize(S * B * H);
    zeros.assign(B * H, T(0));
    gh.resize(B * 3 * H);
    for (std::size_t t = 0; t < S; ++t) {
      const T* h_prev = t ? g.out.data() + (t - 1) * B * H : zeros.data();
      kernels::gemm<T>(cref(h_prev, B, H), Op::none,
                       cref<T>(params.data() + g.w_hh->offset, 3 * H, H), Op::transpose,
                       ref(gh.data(), B, 3 * H));
      for (std::size_t b = 0; b < B; ++b) {
        const T* gi = g.gi.data() + (t * B + b) * 3 * H;
        const T* gg = gh.data() + b * 3 * H;
        const std::size_t row = (t * B + b) * H;
        for (std::size_t k = 0; k < H; ++k) {
          const T r = sigmoid(gi[k] + gg[k] + b_hh[k]);
          const T z = sigmoid(gi[H + k] + gg[H + k] + b_hh[H + k]);
          const T hn = gg[2 * H + k] + b_hh[2 * H + k];
          const T n = std::tanh(gi[2 * H + k] + r * hn);
          g.r[row + k] = r;
          g.z[row + k] = z;
          g.hn[row + k] = hn;
          g.n[row + k] = n;
          g.out[row + k] = (T(1) - z) * n + z * h_prev[b * H + k];
        }
      }
    }
    layer_in = g.out.data();
  }

  // Final hidden state -> dense stack.
  const T* a = layer_in + (S - 1) * B * gru_.back().hidden;
  const double keep = 1.0 - config_.dropout;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    auto& d = dense_[i];
    d.mask.assign(B * d.in, T(1));
    if (train && config_.dropout > 0) {
      std::uint64_t state = derive_seed(dropout_seed, static_cast<std::uint64_t>(i));
      for (auto& m : d.mask) m = unit_uniform(state) < keep ? T(1.0 / keep) : T(0);
    }
    d.input.resize(B * d.in);
    for (std::size_t k = 0; k < B * d.in; ++k) d.input[k] = a[k] * d.mask[k];
    d.output.resize(B * d.out);
    kernels::gemm<T>(cref<T>(d.input.data(), B, d.in), Op::none,
                     cref<T>(params.data() + d.w->offset, d.out, d.in), Op::transpose,
                     ref(d.output.data(), B, d.out));
    const T* bias = params.data() + d.b->offset;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < d.out; ++o) {
        T& v = d.output[b * d.out + o];
        v += bias[o];
        if (d.relu) v = std::max(v, T(0));
      }
    a = d.output.data();
  }

  probs_.resize(B * 2);
  for (std::size_t b = 0; b < B; ++b) {
    const T l0 = a[2 * b], l1 = a[2 * b + 1];
    const T m = std::max(l0, l1);
    const T e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
    probs_[2 * b] = e0 / (e0 + e1);
    probs_[2 * b + 1] = e1 / (e0 + e1);
  }
  return probs_;
}

template <typename T>
void Network<T>::backward(std::span<const T> params, std::span<const T> dlogits,
                          std::span<T> grad, std::span<T> input_grad) {
  const std::size_t B = batch_;
  const std::size_t S = steps_;
  std::fill(grad.begin(), grad.end(), T(0));

  std::vector<T> dout(dlogits.begin(), dlogits.end()), din;
  for (std::size_t i = dense_.size(); i-- > 0;) {
    auto& d = dense_[i];
    if (d.relu)
      for (std::size_t k = 0; k < B * d.out; ++k)
        if (d.output[k] <= T(0)) dout[k] = T(0);
    kernels::gemm<T>(cref<T>(dout.data(), B, d.out), Op::transpose,
                     cref<T>(d.input.data(), B, d.in), Op::none,
                     ref(grad.data() + d.w->offset, d.out, d.in));
    add_column_sums(dout.data(), B, d.out, grad.data() + d.b->offset);
    din.resize(B * d.in);
    kernels::gemm<T>(cref<T>(dout.data(), B, d.out), Op::none,
                     cref<T>(params.data() + d.w->offset, d.out, d.in), Op::none,
                     ref(din.data(), B, d.in));
    for (std::size_t k = 0; k < B * d.in; ++k) din[k] *= d.mask[k];
    dout.swap(din);
  }

  // dout is now d(final hidden) [B][H_last]; expand to the full output sequence.
  std::vector<T> dseq(S * B * gru_.back().hidden, T(0));
  std::copy(dout.begin(), dout.end(), dseq.begin() + (S - 1) * B * gru_.back().hidden);

  std::vector<T> dgi, dgh, dh, zeros, dx;
  for (std::size_t j = gru_.size(); j-- > 0;) {
    auto& g = gru_[j];
    const std::size_t H = g.hidden;
    const T* x = j ? gru_[j - 1].out.data() : seq_.data();
    dgi.assign(S * B * 3 * H, T(0));
    dgh.resize(B * 3 * H);
    dh.assign(B * H, T(0));  // recurrent carry
    zeros.assign(B * H, T(0));
    T* dw_hh = grad.data() + g.w_hh->offset;
    T* db_hh = grad.data() + g.b_hh->offset;
    for (std::size_t t = S; t-- > 0;) {
      const T* h_prev = t ? g.out.data() + (t - 1) * B * H : zeros.data();
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t row = (t * B + b) * H;
        T* gi = dgi.data() + (t * B + b) * 3 * H;
        T* gg = dgh.data() + b * 3 * H;
        for (std::size_t k = 0; k < H; ++k) {
          const T r = g.r[row + k], z = g.z[row + k], n = g.n[row + k], hn = g.hn[row + k];
          const T dht = dseq[row + k] + dh[b * H + k];
          const T dn = dht * (T(1) - z);
          const T dz = dht * (h_prev[b * H + k] - n);
          const T dan = dn * (T(1) - n * n);
          const T dr = dan * hn;
          const T dar = dr * r * (T(1) - r);
          const T daz = dz * z * (T(1) - z);
          gi[k] = dar;
          gi[H + k] = daz;
          gi[2 * H + k] = dan;
          gg[k] = dar;
          gg[H + k] = daz;
          gg[2 * H + k] = dan * r;
          dh[b * H + k] = dht * z;
        }
      }
      kernels::gemm<T>(cref<T>(dgh.data(), B, 3 * H), Op::transpose, cref(h_prev, B, H),
                       Op::none, ref(dw_hh, 3 * H, H), T(1), T(1));
      add_column_sums(dgh.data(), B, 3 * H, db_hh);
      kernels::gemm<T>(cref<T>(dgh.data(), B, 3 * H), Op::none,
                       cref<T>(params.data() + g.w_hh->offset, 3 * H, H), Op::none,
                       ref(dh.data(), B, H), T(1), T(1));
    }
    kernels::gemm<T>(cref<T>(dgi.data(), S * B, 3 * H), Op::transpose, cref(x, S * B, g.in),
                     Op::none, ref(grad.data() + g.w_ih->offset, 3 * H, g.in));
    add_column_sums(dgi.data(), S * B, 3 * H, grad.data() + g.b_ih->offset);
    dx.resize(S * B * g.in);
    kernels::gemm<T>(cref<T>(dgi.data(), S * B, 3 * H), Op::none,
                     cref<T>(params.data() + g.w_ih->offset, 3 * H, g.in), Op::none,
                     ref(dx.data(), S * B, g.in));
    dseq.swap(dx);
  }

  // Time-major [S][B][C] -> [B][S][C].
  const std::size_t C = conv_.back().out_ch;
  std::vector<T> dpooled(B * S * C);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < S; ++t)
      std::copy_n(dseq.data() + (t * B + b) * C, C, dpooled.data() + (b * S + t) * C);

  std::vector<T> dact, dcols, dinput;
  for (std::size_t i = conv_.size(); i-- > 0;) {
    auto& c = conv_[i];
    const std::size_t L = c.in_len;
    dact.resize(B * L * c.out_ch);
    kernels::maxpool2_backward<T>(dpooled, c.argmax, dact);
    for (std::size_t k = 0; k < dact.size(); ++k)
      if (c.act[k] <= T(0)) dact[k] = T(0);
    kernels::gemm<T>(cref<T>(dact.data(), B * L, c.out_ch), Op::transpose,
                     cref<T>(c.cols.data(), B * L, 3 * c.in_ch), Op::none,
                     ref(grad.data() + c.w->offset, c.out_ch, 3 * c.in_ch));
    add_column_sums(dact.data(), B * L, c.out_ch, grad.data() + c.b->offset);
    if (i == 0 && input_grad.empty()) break;
    dcols.resize(B * L * 3 * c.in_ch);
    kernels::gemm<T>(cref<T>(dact.data(), B * L, c.out_ch), Op::none,
                     cref<T>(params.data() + c.w->offset, c.out_ch, 3 * c.in_ch), Op::none,
                     ref(dcols.data(), B * L, 3 * c.in_ch));
    dinput.resize(B * L * c.in_ch);
    kernels::col2im_k3<T>(dcols, B, L, c.in_ch, dinput);
    if (i == 0) {
      std::copy(dinput.begin(), dinput.end(), input_grad.begin());
    } else {
      dpooled.swap(dinput);
    }
  }
}

template class Network<float>;
template class Network<double>;

}  // namespace codeshield::detail
