// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Batched forward/backward pass over a flat parameter buffer.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "codeshield/detector.hpp"

namespace codeshield::detail {

template <typename T>
class Network {
 public:
  Network(const DetectorConfig& config, std::size_t input_length,
          const std::vector<ParameterInfo>& layout);

  /// x is [batch][input_length], already standardized. With `train` set,
  /// dropout masks are drawn from `dropout_seed`. Returns [batch][2] probabilities.
  std::span<const T> forward(std::span<const T> params, std::span<const T> x, std::size_t batch,
                             bool train, std::uint64_t dropout_seed = 0);

  /// Backpropagates d(objective)/d(logits) ([batch][2]) through the last
  /// forward pass. `grad` (parameter-sized) is overwritten; `input_grad`
  /// receives d/dx when non-empty.
  void backward(std::span<const T> params, std::span<const T> dlogits, std::span<T> grad,
                std::span<T> input_grad = {});

 private:
  struct Conv {
    std::size_t in_len, in_ch, out_ch;
    const ParameterInfo* w;
    const ParameterInfo* b;
    std::vector<T> cols, act, pooled;
    std::vector<std::size_t> argmax;
  };
  struct Gru {
    std::size_t in, hidden;
    const ParameterInfo *w_ih, *w_hh, *b_ih, *b_hh;
    std::vector<T> gi;                // [S*B][3H] input projections incl. b_ih
    std::vector<T> r, z, n, hn, out;  // [S*B][H]; hn = W_hn h + b_hn
  };
  struct Dense {
    std::size_t in, out;
    bool relu;
    const ParameterInfo* w;
    const ParameterInfo* b;
    std::vector<T> mask, input, output;  // input is post-dropout
  };

  const ParameterInfo& find(const std::vector<ParameterInfo>& layout, const std::string& name);

  DetectorConfig config_;
  std::size_t input_length_;
  std::size_t batch_ = 0;
  std::size_t steps_ = 0;
  std::vector<Conv> conv_;
  std::vector<Gru> gru_;
  std::vector<Dense> dense_;  // hidden layers then the output layer
  std::vector<T> input_, seq_, probs_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace codeshield::detail
