// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Poisoned-sample classifier: 1-D conv stack -> stacked GRU -> dense -> softmax(2).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace codeshield {

struct DetectorConfig {
  std::vector<std::size_t> conv_channels{16, 32, 64, 128, 256};
  std::size_t kernel_size = 3;
  std::size_t padding = 1;
  std::size_t pool_size = 2;
  std::vector<std::size_t> gru_hidden{256, 256, 256};
  std::vector<std::size_t> dense{1024, 512};
  double dropout = 0.3;
  double l1 = 1e-4;
  double l2 = 1e-4;
  double learning_rate = 1e-3;
  std::string scheduler = "cosine";  // "cosine" or "constant"
  double max_grad_norm = 1.0;
  std::size_t max_epochs = 256;
  std::size_t early_stopping_patience = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;

  /// Throws ConfigError. Only kernel 3 / padding 1 / pool 2 are implemented.
  void validate() const;
  /// Smallest input that survives the pooling stack.
  std::size_t min_input_length() const;
  bool operator==(const DetectorConfig&) const = default;
};

void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);

struct ParameterInfo {
  std::string name;  // e.g. "conv0.weight", "gru2.weight_hh", "output.bias"
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  bool regularized = false;  // weights yes, biases no
  std::size_t size() const { return rows * cols; }
};

/// Parameter tensors in declared layer order for the given shapes.
std::vector<ParameterInfo> parameter_layout(const DetectorConfig& config, std::size_t input_length);

struct DetectorModel {
  DetectorConfig config;
  std::size_t input_length = 0;
  std::vector<ParameterInfo> layout;
  std::vector<float> parameters;
  // Per-dimension standardization applied before the network; identity
  // until train() fits it on the training features.
  std::vector<float> input_mean;
  std::vector<float> input_scale;

  std::size_t parameter_count() const { return parameters.size(); }
  /// Steps and width of the sequence fed to the GRU stack.
  std::size_t sequence_length() const;
};

/// Randomly initialised model; throws Error naming the minimum length when
/// the input is too short for the pooling stack.
DetectorModel build_model(std::size_t input_length, const DetectorConfig& config);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0;
  double train_loss = 0;  // mean objective over the epoch's batches (dropout on)
  double train_accuracy = 0;  // inference mode over the full training set
  double val_loss = 0;
  double val_accuracy = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t stopping_epoch = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0;
  std::string checkpoint;  // path of the best-val checkpoint, filled by callers that save one
  double wall_clock_seconds = 0;
  bool early_stopped = false;
};

/// JSON without wall-clock, so equal runs serialise identically.
nlohmann::json report_to_json(const TrainReport& report);

struct LabeledVectors {
  std::vector<std::vector<float>> features;
  std::vector<int> labels;  // 1 = poisoned
};

/// Fits standardization, trains with early stopping and leaves the best-val
/// parameters in `model`. Throws Error on a single-class training set, a
/// length mismatch, or a NaN loss (naming the epoch).
TrainReport train(DetectorModel& model, const LabeledVectors& train_set,
                  const LabeledVectors& val_set);

/// (p_clean, p_poison), dropout disabled.
std::pair<double, double> predict(const DetectorModel& model, std::span<const float> features);
/// p_poison for every vector, in order.
std::vector<double> predict_poison(const DetectorModel& model,
                                   const std::vector<std::vector<float>>& features);

/// Mean cross-entropy plus penalties, dropout disabled, in double precision.
double objective(const DetectorModel& model, std::span<const float> features, int label);

/// Max relative error between analytic and central-difference gradients of
/// `objective` over 100 seeded random parameter coordinates (all of them if
/// fewer). Relative error is |a - n| / max(|a|, |n|, 1e-8).
double gradient_check(const DetectorModel& model, std::span<const float> features, int label,
                      double epsilon, std::uint64_t seed = 1);

/// |d p_predicted / d input| for each raw input dimension, in double precision.
std::vector<double> saliency(const DetectorModel& model, std::span<const float> features);

/// Rescales `gradient` in place so its L2 norm is at most `max_norm`;
/// returns the pre-clip norm.
double clip_gradient_norm(std::span<float> gradient, double max_norm);

/// Learning rate for a 0-based epoch under the configured schedule.
double scheduled_learning_rate(const DetectorConfig& config, std::size_t epoch);

void save_model(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_model(const std::filesystem::path& path);

}  // namespace codeshield
