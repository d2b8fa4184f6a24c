// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/subword.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "codeshield/common.hpp"
#include "codeshield/json_io.hpp"

namespace codeshield {

namespace {

constexpr std::string_view kFormat = "codeshield.subword";
constexpr int kVersion = 1;
constexpr std::size_t kNegativeTableSize = 1'000'000;

float sigmoid(float x) {
  if (x > 8.f) return 1.f;
  if (x < -8.f) return 0.f;
  return 1.f / (1.f + std::exp(-x));
}

}  // namespace

std::size_t SubwordHashEmbedder::bucket_of(std::string_view ngram) const {
  return words_.size() + fnv1a64(ngram) % config_.bucket_count;
}

std::vector<std::size_t> SubwordHashEmbedder::subword_rows(std::string_view word) const {
  std::vector<std::size_t> rows;
  if (auto it = word_index_.find(std::string(word)); it != word_index_.end())
    rows.push_back(it->second);
  const std::string padded = "<" + std::string(word) + ">";
  // n-grams are over bytes; identifiers are ASCII after normalization.
  for (std::size_t n = config_.min_n; n <= config_.max_n; ++n)
    for (std::size_t i = 0; i + n <= padded.size(); ++i)
      rows.push_back(bucket_of(std::string_view(padded).substr(i, n)));
  return rows;
}

std::vector<float> SubwordHashEmbedder::embed_token(std::string_view word) const {
  const std::size_t d = config_.dimension;
  std::vector<float> v(d, 0.f);
  const auto rows = subword_rows(word);
  if (rows.empty() || input_.empty()) return v;
  for (std::size_t r : rows) {
    const float* row = &input_[r * d];
    for (std::size_t k = 0; k < d; ++k) v[k] += row[k];
  }
  const float inv = 1.f / static_cast<float>(rows.size());
  for (auto& x : v) x *= inv;
  return v;
}

std::vector<float> SubwordHashEmbedder::output_map(std::span<const float> mean_vector) const {
  std::vector<float> out(mean_vector.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (mean_vector[k] - shift_[k]) / scale_[k];
  return out;
}

std::vector<float> SubwordHashEmbedder::embed_text(std::span<const std::string> tokens) const {
  const std::size_t d = config_.dimension;
  if (tokens.empty()) return std::vector<float>(d, 0.f);
  std::vector<double> sum(d, 0.0);
  for (const auto& t : tokens) {
    const auto v = embed_token(t);
    for (std::size_t k = 0; k < d; ++k) sum[k] += v[k];
  }
  std::vector<float> mean(d);
  for (std::size_t k = 0; k < d; ++k) mean[k] = static_cast<float>(sum[k] / tokens.size());
  return output_map(mean);
}

SubwordHashEmbedder train_subword_embedder(const std::vector<std::vector<std::string>>& corpus,
                                           const SubwordConfig& config) {
  if (config.dimension == 0 || config.bucket_count == 0 || config.min_n == 0 ||
      config.min_n > config.max_n)
    throw ConfigError("invalid subword embedder dimensions");

  std::map<std::string, std::size_t> freq;
  std::size_t total = 0;
  for (const auto& sentence : corpus)
    for (const auto& w : sentence) {
      ++freq[w];
      ++total;
    }
  if (total == 0) throw Error("cannot train subword embedder on an empty corpus");

  SubwordHashEmbedder m;
  m.config_ = config;
  // Frequency-descending vocabulary, ties alphabetical.
  std::vector<std::pair<std::string, std::size_t>> by_freq(freq.begin(), freq.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [w, _] : by_freq) {
    m.word_index_.emplace(w, m.words_.size());
    m.words_.push_back(w);
  }

  const std::size_t d = config.dimension;
  const std::size_t nwords = m.words_.size();
  std::mt19937_64 rng(config.seed);
  m.input_.resize((nwords + config.bucket_count) * d);
  std::uniform_real_distribution<float> init(-1.f / d, 1.f / d);
  for (auto& x : m.input_) x = init(rng);
  m.output_.assign(nwords * d, 0.f);

  std::vector<std::uint32_t> negatives;
  {
    double norm = 0;
    for (const auto& [w, c] : by_freq) norm += std::pow(static_cast<double>(c), 0.75);
    for (std::size_t i = 0; i < nwords; ++i) {
      const double share = std::pow(static_cast<double>(by_freq[i].second), 0.75) / norm;
      const auto slots = static_cast<std::size_t>(std::ceil(share * kNegativeTableSize));
      negatives.insert(negatives.end(), slots, static_cast<std::uint32_t>(i));
    }
  }

  std::vector<std::vector<std::uint32_t>> ids(corpus.size());
  std::vector<std::vector<std::size_t>> rows_of(nwords);
  for (std::size_t i = 0; i < nwords; ++i) rows_of[i] = m.subword_rows(m.words_[i]);
  for (std::size_t s = 0; s < corpus.size(); ++s)
    for (const auto& w : corpus[s]) ids[s].push_back(static_cast<std::uint32_t>(m.word_index_[w]));

  std::vector<float> hidden(d), grad(d);
  const double steps = static_cast<double>(config.epochs) * static_cast<double>(total);
  double done = 0;
  std::uniform_int_distribution<std::size_t> pick_negative(0, negatives.size() - 1);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& sentence : ids) {
      const std::size_t len = sentence.size();
      for (std::size_t pos = 0; pos < len; ++pos, done += 1) {
        const float lr = static_cast<float>(config.learning_rate * (1.0 - done / steps));
        const auto& rows = rows_of[sentence[pos]];
        const std::size_t shrink =
            config.window > 1 ? std::uniform_int_distribution<std::size_t>(0, config.window - 1)(rng)
                              : 0;
        const std::size_t span = config.window - shrink;
        const std::size_t lo = pos >= span ? pos - span : 0;
        const std::size_t hi = std::min(len, pos + span + 1);
        for (std::size_t c = lo; c < hi; ++c) {
          if (c == pos) continue;
          std::fill(hidden.begin(), hidden.end(), 0.f);
          for (std::size_t r : rows) {
            const float* row = &m.input_[r * d];
            for (std::size_t k = 0; k < d; ++k) hidden[k] += row[k];
          }
          const float inv = 1.f / static_cast<float>(rows.size());
          for (auto& x : hidden) x *= inv;
          std::fill(grad.begin(), grad.end(), 0.f);
          for (std::size_t n = 0; n <= config.negatives; ++n) {
            std::uint32_t target = sentence[c];
            float label = 1.f;
            if (n > 0) {
              target = negatives[pick_negative(rng)];
              if (target == sentence[c]) continue;
              label = 0.f;
            }
            float* out = &m.output_[target * d];
            float score = 0.f;
            for (std::size_t k = 0; k < d; ++k) score += out[k] * hidden[k];
            const float g = lr * (label - sigmoid(score));
            for (std::size_t k = 0; k < d; ++k) {
              grad[k] += g * out[k];
              out[k] += g * hidden[k];
            }
          }
          for (std::size_t r : rows) {
            float* row = &m.input_[r * d];
            for (std::size_t k = 0; k < d; ++k) row[k] += grad[k];
          }
        }
      }
    }
  }

  // Output map: standardize each dimension over the vocabulary's vectors.
  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  for (const auto& w : m.words_) {
    const auto v = m.embed_token(w);
    for (std::size_t k = 0; k < d; ++k) {
      mean[k] += v[k];
      sq[k] += static_cast<double>(v[k]) * v[k];
    }
  }
  m.shift_.resize(d);
  m.scale_.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double mu = mean[k] / nwords;
    const double var = std::max(0.0, sq[k] / nwords - mu * mu);
    m.shift_[k] = static_cast<float>(mu);
    m.scale_[k] = var > 1e-16 ? static_cast<float>(std::sqrt(var)) : 1.f;
  }
  return m;
}

void SubwordHashEmbedder::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  ckpt.format = kFormat;
  ckpt.version = kVersion;
  ckpt.meta = {{"dimension", config_.dimension}, {"min_n", config_.min_n},
               {"max_n", config_.max_n},         {"bucket_count", config_.bucket_count},
               {"window", config_.window},       {"epochs", config_.epochs},
               {"negatives", config_.negatives}, {"learning_rate", config_.learning_rate},
               {"seed", config_.seed},           {"words", words_}};
  const std::size_t d = config_.dimension;
  ckpt.blobs.push_back({"input", {input_.size() / d, d}, input_});
  ckpt.blobs.push_back({"output", {output_.size() / d, d}, output_});
  ckpt.blobs.push_back({"shift", {d}, shift_});
  ckpt.blobs.push_back({"scale", {d}, scale_});
  save_checkpoint(path, ckpt);
}

SubwordHashEmbedder SubwordHashEmbedder::load(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path, kFormat, kVersion);
  SubwordHashEmbedder m;
  try {
    const auto& j = ckpt.meta;
    m.config_.dimension = j.at("dimension");
    m.config_.min_n = j.at("min_n");
    m.config_.max_n = j.at("max_n");
    m.config_.bucket_count = j.at("bucket_count");
    m.config_.window = j.at("window");
    m.config_.epochs = j.at("epochs");
    m.config_.negatives = j.at("negatives");
    m.config_.learning_rate = j.at("learning_rate");
    m.config_.seed = j.at("seed");
    m.words_ = j.at("words").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error("corrupt subword embedder header in " + path.string() + ": " + ex.what());
  }
  for (std::size_t i = 0; i < m.words_.size(); ++i) m.word_index_.emplace(m.words_[i], i);
  m.input_ = ckpt.blob("input").values;
  m.output_ = ckpt.blob("output").values;
  m.shift_ = ckpt.blob("shift").values;
  m.scale_ = ckpt.blob("scale").values;
  const std::size_t d = m.config_.dimension;
  if (m.input_.size() != (m.words_.size() + m.config_.bucket_count) * d ||
      m.output_.size() != m.words_.size() * d || m.shift_.size() != d || m.scale_.size() != d)
    throw Error("subword embedder checkpoint " + path.string() + " has inconsistent shapes");
  return m;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size() && k < b.size(); ++k) {
    dot += static_cast<double>(a[k]) * b[k];
    na += static_cast<double>(a[k]) * a[k];
    nb += static_cast<double>(b[k]) * b[k];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace codeshield
