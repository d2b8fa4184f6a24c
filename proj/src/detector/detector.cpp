// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <set>

#include "codeshield/common.hpp"
#include "codeshield/json_io.hpp"
#include "network.hpp"

namespace codeshield {

namespace {

constexpr const char* kFormat = "codeshield.detector";
constexpr int kVersion = 1;
constexpr std::size_t kInferenceBatch = 256;

double unit_uniform(std::uint64_t& state) {
  state = splitmix64(state);
  return static_cast<double>(state >> 11) * 0x1.0p-53;
}

// Fisher-Yates driven by splitmix64 so the order is library-independent.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::uint64_t state = seed;
  for (std::size_t i = n; i > 1; --i) {
    state = splitmix64(state);
    std::swap(order[i - 1], order[state % i]);
  }
  return order;
}

template <typename T>
std::vector<T> standardize(const DetectorModel& m, std::span<const float> x) {
  if (x.size() != m.input_length)
    throw Error("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                std::to_string(m.input_length));
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (static_cast<T>(x[i]) - static_cast<T>(m.input_mean[i])) /
             static_cast<T>(m.input_scale[i]);
  return out;
}

template <typename T>
double penalty(const DetectorModel& m, std::span<const T> params) {
  double l1 = 0, l2 = 0;
  for (const auto& p : m.layout) {
    if (!p.regularized) continue;
    for (std::size_t k = p.offset; k < p.offset + p.size(); ++k) {
      l1 += std::abs(static_cast<double>(params[k]));
      l2 += static_cast<double>(params[k]) * params[k];
    }
  }
  return m.config.l1 * l1 + m.config.l2 * l2;
}

template <typename T>
void add_penalty_gradient(const DetectorModel& m, std::span<const T> params, std::span<T> grad) {
  const T l1 = static_cast<T>(m.config.l1), l2 = static_cast<T>(2 * m.config.l2);
  for (const auto& p : m.layout) {
    if (!p.regularized) continue;
    for (std::size_t k = p.offset; k < p.offset + p.size(); ++k) {
      const T w = params[k];
      grad[k] += l1 * static_cast<T>((w > 0) - (w < 0)) + l2 * w;
    }
  }
}

struct SetStats {
  double loss = 0;
  double accuracy = 0;
};

// Inference-mode mean cross-entropy and accuracy over standardized rows.
SetStats evaluate_rows(detail::Network<float>& net, std::span<const float> params,
                       const std::vector<float>& rows, const std::vector<int>& labels,
                       std::size_t width) {
  SetStats s;
  const std::size_t n = labels.size();
  if (n == 0) return s;
  for (std::size_t start = 0; start < n; start += kInferenceBatch) {
    const std::size_t b = std::min(kInferenceBatch, n - start);
    auto p = net.forward(params, {rows.data() + start * width, b * width}, b, false);
    for (std::size_t i = 0; i < b; ++i) {
      const int y = labels[start + i];
      s.loss -= std::log(std::max(static_cast<double>(p[2 * i + y]), 1e-12));
      s.accuracy += (p[2 * i + 1] >= 0.5f) == (y == 1);
    }
  }
  s.loss /= static_cast<double>(n);
  s.accuracy /= static_cast<double>(n);
  return s;
}

std::vector<float> standardized_rows(const DetectorModel& m, const LabeledVectors& set) {
  std::vector<float> rows;
  rows.reserve(set.features.size() * m.input_length);
  for (const auto& f : set.features) {
    const auto r = standardize<float>(m, f);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

}  // namespace

void DetectorConfig::validate() const {
  auto positive = [](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::size_t x) { return x > 0; });
  };
  if (conv_channels.empty() || !positive(conv_channels))
    throw ConfigError("detector.conv_channels must be a non-empty list of positive counts");
  if (kernel_size != 3) throw ConfigError("detector.kernel_size: only 3 is supported");
  if (padding != 1) throw ConfigError("detector.padding: only 1 is supported");
  if (pool_size != 2) throw ConfigError("detector.pool_size: only 2 is supported");
  if (gru_hidden.empty() || !positive(gru_hidden))
    throw ConfigError("detector.gru_hidden must be a non-empty list of positive widths");
  if (!positive(dense)) throw ConfigError("detector.dense widths must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("detector.dropout must be in [0, 1)");
  if (!(l1 >= 0) || !(l2 >= 0)) throw ConfigError("detector.l1 and detector.l2 must be >= 0");
  if (!(learning_rate > 0)) throw ConfigError("detector.learning_rate must be > 0");
  if (scheduler != "cosine" && scheduler != "constant")
    throw ConfigError("detector.scheduler must be \"cosine\" or \"constant\"");
  if (!(max_grad_norm > 0)) throw ConfigError("detector.max_grad_norm must be > 0");
  if (max_epochs == 0) throw ConfigError("detector.max_epochs must be >= 1");
  if (early_stopping_patience == 0)
    throw ConfigError("detector.early_stopping_patience must be >= 1");
  if (batch_size == 0) throw ConfigError("detector.batch_size must be >= 1");
}

std::size_t DetectorConfig::min_input_length() const {
  return std::size_t{1} << conv_channels.size();
}

void to_json(nlohmann::json& j, const DetectorConfig& c) {
  j = nlohmann::json{{"conv_channels", c.conv_channels},
                     {"kernel_size", c.kernel_size},
                     {"padding", c.padding},
                     {"pool_size", c.pool_size},
                     {"gru_hidden", c.gru_hidden},
                     {"dense", c.dense},
                     {"dropout", c.dropout},
                     {"l1", c.l1},
                     {"l2", c.l2},
                     {"learning_rate", c.learning_rate},
                     {"scheduler", c.scheduler},
                     {"max_grad_norm", c.max_grad_norm},
                     {"max_epochs", c.max_epochs},
                     {"early_stopping_patience", c.early_stopping_patience},
                     {"batch_size", c.batch_size},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, DetectorConfig& c) {
  static const std::set<std::string> known{
      "conv_channels", "kernel_size",   "padding",   "pool_size",     "gru_hidden",
      "dense",         "dropout",       "l1",        "l2",            "learning_rate",
      "scheduler",     "max_grad_norm", "max_epochs", "early_stopping_patience",
      "batch_size",    "seed"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown detector key '" + key + "'");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("conv_channels", c.conv_channels);
  get("kernel_size", c.kernel_size);
  get("padding", c.padding);
  get("pool_size", c.pool_size);
  get("gru_hidden", c.gru_hidden);
  get("dense", c.dense);
  get("dropout", c.dropout);
  get("l1", c.l1);
  get("l2", c.l2);
  get("learning_rate", c.learning_rate);
  get("scheduler", c.scheduler);
  get("max_grad_norm", c.max_grad_norm);
  get("max_epochs", c.max_epochs);
  get("early_stopping_patience", c.early_stopping_patience);
  get("batch_size", c.batch_size);
  get("seed", c.seed);
}

std::vector<ParameterInfo> parameter_layout(const DetectorConfig& config,
                                            std::size_t input_length) {
  (void)input_length;  // shapes do not depend on it; kept for the checkpoint contract
  std::vector<ParameterInfo> out;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols, bool reg) {
    out.push_back({std::move(name), rows, cols, offset, reg});
    offset += rows * cols;
  };
  std::size_t ch = 1;
  for (std::size_t i = 0; i < config.conv_channels.size(); ++i) {
    const std::string p = "conv" + std::to_string(i);
    add(p + ".weight", config.conv_channels[i], config.kernel_size * ch, true);
    add(p + ".bias", 1, config.conv_channels[i], false);
    ch = config.conv_channels[i];
  }
  std::size_t in = ch;
  for (std::size_t i = 0; i < config.gru_hidden.size(); ++i) {
    const std::string p = "gru" + std::to_string(i);
    const std::size_t h = config.gru_hidden[i];
    add(p + ".weight_ih", 3 * h, in, true);
    add(p + ".weight_hh", 3 * h, h, true);
    add(p + ".bias_ih", 1, 3 * h, false);
    add(p + ".bias_hh", 1, 3 * h, false);
    in = h;
  }
  for (std::size_t i = 0; i < config.dense.size(); ++i) {
    const std::string p = "dense" + std::to_string(i);
    add(p + ".weight", config.dense[i], in, true);
    add(p + ".bias", 1, config.dense[i], false);
    in = config.dense[i];
  }
  add("output.weight", 2, in, true);
  add("output.bias", 1, 2, false);
  return out;
}

std::size_t DetectorModel::sequence_length() const {
  return input_length >> config.conv_channels.size();
}

DetectorModel build_model(std::size_t input_length, const DetectorConfig& config) {
  config.validate();
  if (input_length < config.min_input_length())
    throw Error("detector input length " + std::to_string(input_length) + " is too short for " +
                std::to_string(config.conv_channels.size()) + " pooling stages; minimum is " +
                std::to_string(config.min_input_length()));
  DetectorModel m;
  m.config = config;
  m.input_length = input_length;
  m.layout = parameter_layout(config, input_length);
  m.parameters.assign(m.layout.back().offset + m.layout.back().size(), 0.f);
  std::size_t fan_in = 1;  // of the most recent weight matrix
  for (const auto& p : m.layout) {
    const bool gru = p.name.rfind("gru", 0) == 0;
    double bound = 0;
    if (gru) {
      bound = 1.0 / std::sqrt(static_cast<double>(p.name.find("bias") != std::string::npos
                                                      ? p.cols / 3
                                                      : p.rows / 3));
    } else if (p.regularized) {
      fan_in = p.cols;
      bound = std::sqrt(6.0 / static_cast<double>(p.cols));  // He-uniform on fan-in
    } else {
      // Nonzero biases keep ReLU pre-activations off the kink for zeroed inputs.
      bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    }
    std::uint64_t state = derive_seed(config.seed, p.name);
    for (std::size_t k = p.offset; k < p.offset + p.size(); ++k)
      m.parameters[k] = static_cast<float>((2 * unit_uniform(state) - 1) * bound);
  }
  m.input_mean.assign(input_length, 0.f);
  m.input_scale.assign(input_length, 1.f);
  return m;
}

nlohmann::json report_to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"learning_rate", e.learning_rate},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_loss", e.val_loss},
                      {"val_accuracy", e.val_accuracy}});
  return {{"epochs", epochs},
          {"stopping_epoch", r.stopping_epoch},
          {"best_epoch", r.best_epoch},
          {"best_val_loss", r.best_val_loss},
          {"early_stopped", r.early_stopped},
          {"checkpoint", r.checkpoint}};
}

double clip_gradient_norm(std::span<float> gradient, double max_norm) {
  double sq = 0;
  for (float g : gradient) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (float& g : gradient) g = static_cast<float>(g * s);
  }
  return norm;
}

double scheduled_learning_rate(const DetectorConfig& c, std::size_t epoch) {
  if (c.scheduler == "constant") return c.learning_rate;
  return 0.5 * c.learning_rate *
         (1 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                       static_cast<double>(c.max_epochs)));
}

TrainReport train(DetectorModel& model, const LabeledVectors& train_set,
                  const LabeledVectors& val_set) {
  const auto t0 = std::chrono::steady_clock::now();
  const DetectorConfig& cfg = model.config;
  cfg.validate();
  const std::size_t n = train_set.features.size();
  const std::size_t width = model.input_length;
  if (train_set.labels.size() != n || val_set.labels.size() != val_set.features.size())
    throw Error("feature and label counts differ");
  for (const auto* set : {&train_set, &val_set})
    for (const auto& f : set->features)
      if (f.size() != width)
        throw Error("feature vector has " + std::to_string(f.size()) +
                    " values, model expects " + std::to_string(width));
  std::size_t positives = 0;
  for (int y : train_set.labels) {
    if (y != 0 && y != 1) throw Error("labels must be 0 (clean) or 1 (poisoned)");
    positives += y == 1;
  }
  if (positives == 0 || positives == n)
    throw Error("training set has a single class; both clean and poisoned samples are needed");

  // Population mean / std of the training features.
  model.input_mean.assign(width, 0.f);
  model.input_scale.assign(width, 1.f);
  for (std::size_t d = 0; d < width; ++d) {
    double s = 0, sq = 0;
    for (const auto& f : train_set.features) s += f[d];
    const double mean = s / static_cast<double>(n);
    for (const auto& f : train_set.features) sq += (f[d] - mean) * (f[d] - mean);
    const double sd = std::sqrt(sq / static_cast<double>(n));
    model.input_mean[d] = static_cast<float>(mean);
    model.input_scale[d] = sd > 1e-8 ? static_cast<float>(sd) : 1.f;
  }
  const std::vector<float> train_rows = standardized_rows(model, train_set);
  const std::vector<float> val_rows = standardized_rows(model, val_set);

  detail::Network<float> net(cfg, width, model.layout);
  std::vector<float>& w = model.parameters;
  const std::size_t P = w.size();
  std::vector<float> grad(P), adam_m(P, 0.f), adam_v(P, 0.f), best = w;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::uint64_t step = 0;

  TrainReport report;
  report.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<float> xb, dlogits;
  const std::uint64_t shuffle_seed = derive_seed(cfg.seed, "shuffle");
  const std::uint64_t dropout_seed = derive_seed(cfg.seed, "dropout");

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = scheduled_learning_rate(cfg, epoch);
    const auto order = permutation(n, derive_seed(shuffle_seed, epoch));
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      xb.resize(b * width);
      for (std::size_t i = 0; i < b; ++i)
        std::copy_n(train_rows.data() + order[start + i] * width, width, xb.data() + i * width);
      auto p = net.forward(w, xb, b, true, derive_seed(dropout_seed, epoch * 1000003 + batches));
      dlogits.assign(2 * b, 0.f);
      double ce = 0;
      for (std::size_t i = 0; i < b; ++i) {
        const int y = train_set.labels[order[start + i]];
        ce -= std::log(std::max(static_cast<double>(p[2 * i + y]), 1e-12));
        dlogits[2 * i] = (p[2 * i] - (y == 0)) / static_cast<float>(b);
        dlogits[2 * i + 1] = (p[2 * i + 1] - (y == 1)) / static_cast<float>(b);
      }
      ce /= static_cast<double>(b);
      const double objective = ce + penalty<float>(model, w);
      if (!std::isfinite(objective))
        throw Error("detector training diverged (non-finite loss) at epoch " +
                    std::to_string(epoch + 1));
      net.backward(w, dlogits, grad);
      add_penalty_gradient<float>(model, w, grad);
      clip_gradient_norm(grad, cfg.max_grad_norm);
      ++step;
      const double c1 = 1 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t k = 0; k < P; ++k) {
        adam_m[k] = static_cast<float>(kBeta1 * adam_m[k] + (1 - kBeta1) * grad[k]);
        adam_v[k] = static_cast<float>(kBeta2 * adam_v[k] + (1 - kBeta2) * grad[k] * grad[k]);
        w[k] -= static_cast<float>(lr * (adam_m[k] / c1) / (std::sqrt(adam_v[k] / c2) + kEps));
      }
      loss_sum += objective;
      ++batches;
    }

    EpochStats st;
    st.epoch = epoch + 1;
    st.learning_rate = lr;
    st.train_loss = loss_sum / static_cast<double>(batches);
    st.train_accuracy = evaluate_rows(net, w, train_rows, train_set.labels, width).accuracy;
    if (!val_set.labels.empty()) {
      const auto v = evaluate_rows(net, w, val_rows, val_set.labels, width);
      st.val_loss = v.loss;
      st.val_accuracy = v.accuracy;
    } else {
      st.val_loss = st.train_loss;  // no validation data: track the training objective
      st.val_accuracy = st.train_accuracy;
    }
    if (!std::isfinite(st.val_loss))
      throw Error("detector training diverged (non-finite loss) at epoch " +
                  std::to_string(epoch + 1));
    report.epochs.push_back(st);
    report.stopping_epoch = st.epoch;
    if (st.val_loss < report.best_val_loss) {
      report.best_val_loss = st.val_loss;
      report.best_epoch = st.epoch;
      best = w;
      since_best = 0;
    } else if (++since_best >= cfg.early_stopping_patience) {
      report.early_stopped = true;
      break;
    }
  }
  w = best;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::pair<double, double> predict(const DetectorModel& model, std::span<const float> features) {
  const auto x = standardize<float>(model, features);
  detail::Network<float> net(model.config, model.input_length, model.layout);
  auto p = net.forward(model.parameters, x, 1, false);
  return {p[0], p[1]};
}

std::vector<double> predict_poison(const DetectorModel& model,
                                   const std::vector<std::vector<float>>& features) {
  detail::Network<float> net(model.config, model.input_length, model.layout);
  std::vector<double> out;
  out.reserve(features.size());
  std::vector<float> rows;
  for (std::size_t start = 0; start < features.size(); start += kInferenceBatch) {
    const std::size_t b = std::min(kInferenceBatch, features.size() - start);
    rows.clear();
    for (std::size_t i = 0; i < b; ++i) {
      const auto r = standardize<float>(model, features[start + i]);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    auto p = net.forward(model.parameters, rows, b, false);
    for (std::size_t i = 0; i < b; ++i) out.push_back(p[2 * i + 1]);
  }
  return out;
}

namespace {

struct DoubleEval {
  detail::Network<double> net;
  std::vector<double> params;
  std::vector<double> x;
};

DoubleEval double_eval(const DetectorModel& model, std::span<const float> features) {
  DoubleEval e{detail::Network<double>(model.config, model.input_length, model.layout),
               std::vector<double>(model.parameters.begin(), model.parameters.end()),
               standardize<double>(model, features)};
  return e;
}

double objective_at(const DetectorModel& model, DoubleEval& e, int label) {
  auto p = e.net.forward(e.params, e.x, 1, false);
  return -std::log(std::max(p[label], 1e-300)) + penalty<double>(model, e.params);
}

}  // namespace

double objective(const DetectorModel& model, std::span<const float> features, int label) {
  auto e = double_eval(model, features);
  return objective_at(model, e, label);
}

double gradient_check(const DetectorModel& model, std::span<const float> features, int label,
                      double epsilon, std::uint64_t seed) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3))
    throw Error("gradient_check epsilon must be in [1e-6, 1e-3]");
  auto e = double_eval(model, features);
  auto p = e.net.forward(e.params, e.x, 1, false);
  const std::vector<double> dlogits{p[0] - (label == 0), p[1] - (label == 1)};
  std::vector<double> grad(e.params.size());
  e.net.backward(e.params, dlogits, grad);
  add_penalty_gradient<double>(model, e.params, grad);

  auto coords = permutation(e.params.size(), derive_seed(seed, "gradient_check"));
  coords.resize(std::min<std::size_t>(100, coords.size()));
  double worst = 0;
  for (std::size_t k : coords) {
    const double saved = e.params[k];
    e.params[k] = saved + epsilon;
    const double up = objective_at(model, e, label);
    e.params[k] = saved - epsilon;
    const double down = objective_at(model, e, label);
    e.params[k] = saved;
    const double numeric = (up - down) / (2 * epsilon);
    const double denom = std::max({std::abs(grad[k]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(grad[k] - numeric) / denom);
  }
  return worst;
}

std::vector<double> saliency(const DetectorModel& model, std::span<const float> features) {
  auto e = double_eval(model, features);
  auto p = e.net.forward(e.params, e.x, 1, false);
  const int c = p[1] >= 0.5 ? 1 : 0;
  // d p_c / d logit_j = p_c (delta_cj - p_j)
  const std::vector<double> dlogits{p[c] * ((c == 0) - p[0]), p[c] * ((c == 1) - p[1])};
  std::vector<double> grad(e.params.size()), dx(model.input_length);
  e.net.backward(e.params, dlogits, grad, dx);
  std::vector<double> out(model.input_length);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(dx[i] / model.input_scale[i]);
  return out;
}

void save_model(const DetectorModel& model, const std::filesystem::path& path) {
  Checkpoint ckpt;
  ckpt.format = kFormat;
  ckpt.version = kVersion;
  ckpt.meta = {{"config", model.config},
               {"input_length", model.input_length},
               {"parameter_count", model.parameter_count()}};
  for (const auto& p : model.layout)
    ckpt.blobs.push_back({p.name,
                          {p.rows, p.cols},
                          std::vector<float>(model.parameters.begin() + p.offset,
                                             model.parameters.begin() + p.offset + p.size())});
  ckpt.blobs.push_back({"input_mean", {model.input_length}, model.input_mean});
  ckpt.blobs.push_back({"input_scale", {model.input_length}, model.input_scale});
  save_checkpoint(path, ckpt);
}

DetectorModel load_model(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path, kFormat, kVersion);
  DetectorModel m;
  try {
    m.config = ckpt.meta.at("config").get<DetectorConfig>();
    m.input_length = ckpt.meta.at("input_length").get<std::size_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error("detector checkpoint " + path.string() + " has a bad header: " + ex.what());
  }
  m.config.validate();
  m.layout = parameter_layout(m.config, m.input_length);
  m.parameters.resize(m.layout.back().offset + m.layout.back().size());
  for (const auto& p : m.layout) {
    const Blob& b = ckpt.blob(p.name);
    if (b.values.size() != p.size())
      throw Error("detector checkpoint blob " + p.name + " has the wrong size");
    std::copy(b.values.begin(), b.values.end(), m.parameters.begin() + p.offset);
  }
  m.input_mean = ckpt.blob("input_mean").values;
  m.input_scale = ckpt.blob("input_scale").values;
  if (m.input_mean.size() != m.input_length || m.input_scale.size() != m.input_length)
    throw Error("detector checkpoint standardization does not match the input length");
  return m;
}

}  // namespace codeshield
