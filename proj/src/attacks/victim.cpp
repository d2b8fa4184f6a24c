// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "codeshield/attacks.hpp"
#include "codeshield/common.hpp"
#include "codeshield/json_io.hpp"
#include "codeshield/text.hpp"

namespace codeshield {

namespace {

constexpr std::string_view kFormat = "codeshield.victim";
constexpr int kVersion = 1;

constexpr std::size_t kEpochs = 30;
constexpr double kLearningRate = 0.2;
constexpr double kL2 = 1e-2;

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

}  // namespace

std::vector<std::vector<std::string>> victim_token_groups(const ParsedMethod& method) {
  std::vector<std::vector<std::string>> groups(method.tokens.size());
  for (std::size_t i = 0; i < method.tokens.size(); ++i)
    if (i != method.name_token) normalize_token(method.tokens, i, groups[i]);
  return groups;
}

std::vector<std::string> victim_stream(const ParsedMethod& method) {
  std::vector<std::string> out;
  for (auto& g : victim_token_groups(method))
    for (auto& w : g) out.push_back(std::move(w));
  return out;
}

std::string method_class(std::string_view method_name) {
  auto parts = split_identifier(method_name);
  return parts.empty() ? std::string() : parts.front();
}

std::optional<std::size_t> VictimOracle::class_index(std::string_view name) const {
  const auto& c = classes();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> VictimOracle::true_class(const ParsedMethod& method) const {
  return class_index(method_class(method.identifiers.method_name));
}

std::vector<double> VictimOracle::probabilities(const ParsedMethod& method) const {
  const auto stream = victim_stream(method);
  return probabilities(std::span<const std::string>(stream));
}

double VictimOracle::probability(const ParsedMethod& method, std::size_t cls) const {
  return probabilities(method).at(cls);
}

std::size_t VictimOracle::predict(const ParsedMethod& method) const {
  const auto p = probabilities(method);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<double> LinearVictim::probabilities(std::span<const std::string> stream) const {
  std::map<std::size_t, double> counts;
  for (const auto& w : stream)
    if (auto it = feature_index_.find(w); it != feature_index_.end()) counts[it->second] += 1;
  const std::size_t nf = features_.size();
  std::vector<double> z(classes_.size());
  for (std::size_t c = 0; c < z.size(); ++c) {
    double s = bias_[c];
    for (const auto& [f, n] : counts) s += static_cast<double>(weights_[c * nf + f]) * std::log1p(n);
    z[c] = s;
  }
  softmax_inplace(z);
  return z;
}

double LinearVictim::weight(std::size_t cls, std::string_view feature) const {
  auto it = feature_index_.find(feature);
  if (it == feature_index_.end()) return 0.0;
  return weights_.at(cls * features_.size() + it->second);
}

LinearVictim train_toy_victim(std::span<const CodeSample* const> samples, std::size_t num_classes,
                              std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("victim needs at least 2 classes");
  struct Row {
    std::string cls;
    std::vector<std::string> stream;
  };
  std::vector<Row> rows;
  std::map<std::string, std::size_t> class_freq;
  for (const CodeSample* s : samples) {
    ParsedMethod pm = parse_method(s->source);
    Row r{method_class(pm.identifiers.method_name), victim_stream(pm)};
    if (r.cls.empty()) continue;
    ++class_freq[r.cls];
    rows.push_back(std::move(r));
  }
  if (class_freq.size() < num_classes)
    throw Error("victim needs " + std::to_string(num_classes) + " method classes, corpus has " +
                std::to_string(class_freq.size()));

  std::vector<std::pair<std::string, std::size_t>> ranked(class_freq.begin(), class_freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(num_classes);

  LinearVictim v;
  for (const auto& [c, _] : ranked) v.classes_.push_back(c);
  std::sort(v.classes_.begin(), v.classes_.end());
  std::erase_if(rows, [&](const Row& r) { return !v.class_index(r.cls); });

  std::map<std::string, std::size_t> feature_set;
  for (const auto& r : rows)
    for (const auto& w : r.stream) feature_set.emplace(w, 0);
  for (auto& [w, idx] : feature_set) {
    idx = v.features_.size();
    v.features_.push_back(w);
    v.feature_index_.emplace(w, idx);
  }

  // Sparse design matrix.
  const std::size_t nc = v.classes_.size();
  const std::size_t nf = v.features_.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> x(rows.size());
  std::vector<std::size_t> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::map<std::size_t, double> counts;
    for (const auto& w : rows[i].stream) counts[v.feature_index_.at(w)] += 1;
    for (const auto& [f, n] : counts) x[i].emplace_back(f, std::log1p(n));
    y[i] = *v.class_index(rows[i].cls);
  }

  std::vector<double> w(nc * nf, 0.0), b(nc, 0.0);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::vector<double> z(nc);
  for (std::size_t epoch = 0; epoch < kEpochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = kLearningRate / (1.0 + epoch);
    for (std::size_t i : order) {
      for (std::size_t c = 0; c < nc; ++c) {
        double s = b[c];
        for (const auto& [f, val] : x[i]) s += w[c * nf + f] * val;
        z[c] = s;
      }
      softmax_inplace(z);
      for (std::size_t c = 0; c < nc; ++c) {
        const double g = z[c] - (c == y[i] ? 1.0 : 0.0);
        b[c] -= lr * g;
        for (const auto& [f, val] : x[i]) {
          double& wf = w[c * nf + f];
          wf -= lr * (g * val + kL2 * wf);
        }
      }
    }
  }
  v.weights_.assign(w.begin(), w.end());
  v.bias_.assign(b.begin(), b.end());

  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto p = v.probabilities(std::span<const std::string>(rows[i].stream));
    if (static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == y[i])
      ++correct;
  }
  v.training_accuracy_ = rows.empty() ? 0.0 : static_cast<double>(correct) / rows.size();
  return v;
}

void LinearVictim::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  ckpt.format = kFormat;
  ckpt.version = kVersion;
  ckpt.meta = {{"classes", classes_},
               {"features", features_},
               {"training_accuracy", training_accuracy_}};
  ckpt.blobs.push_back({"weights", {classes_.size(), features_.size()}, weights_});
  ckpt.blobs.push_back({"bias", {classes_.size()}, bias_});
  save_checkpoint(path, ckpt);
}

LinearVictim LinearVictim::load(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path, kFormat, kVersion);
  LinearVictim v;
  try {
    v.classes_ = ckpt.meta.at("classes").get<std::vector<std::string>>();
    v.features_ = ckpt.meta.at("features").get<std::vector<std::string>>();
    v.training_accuracy_ = ckpt.meta.at("training_accuracy").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error("corrupt victim header in " + path.string() + ": " + ex.what());
  }
  for (std::size_t i = 0; i < v.features_.size(); ++i) v.feature_index_.emplace(v.features_[i], i);
  v.weights_ = ckpt.blob("weights").values;
  v.bias_ = ckpt.blob("bias").values;
  if (v.weights_.size() != v.classes_.size() * v.features_.size() ||
      v.bias_.size() != v.classes_.size())
    throw Error("victim checkpoint " + path.string() + " has inconsistent shapes");
  return v;
}

}  // namespace codeshield
