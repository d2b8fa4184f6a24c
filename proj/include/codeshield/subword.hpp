// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Skip-gram word vectors with hashed character n-grams, trained from scratch
// on normalized code token streams.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace codeshield {

struct SubwordConfig {
  std::size_t dimension = 100;
  std::size_t min_n = 3;
  std::size_t max_n = 5;
  std::size_t bucket_count = std::size_t{1} << 16;
  std::size_t window = 5;
  std::size_t epochs = 5;
  std::size_t negatives = 5;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;

  bool operator==(const SubwordConfig&) const = default;
};

class SubwordHashEmbedder {
 public:
  SubwordHashEmbedder() = default;

  const SubwordConfig& config() const { return config_; }
  std::size_t dimension() const { return config_.dimension; }
  const std::vector<std::string>& vocabulary() const { return words_; }

  /// Rows of the input matrix that make up `word`: its own row when it is in
  /// the vocabulary, then one bucket per character n-gram of "<word>".
  std::vector<std::size_t> subword_rows(std::string_view word) const;

  /// Average of the word's subword rows. Never fails: unseen words use their
  /// n-gram buckets only.
  std::vector<float> embed_token(std::string_view word) const;

  /// Mean token vector passed through the per-dimension output map
  /// (x - mean) / scale. Empty input gives the zero vector.
  std::vector<float> embed_text(std::span<const std::string> tokens) const;

  /// The output map on its own, applied to an already averaged vector.
  std::vector<float> output_map(std::span<const float> mean_vector) const;

  void save(const std::filesystem::path& path) const;
  static SubwordHashEmbedder load(const std::filesystem::path& path);

  bool operator==(const SubwordHashEmbedder&) const = default;

 private:
  friend SubwordHashEmbedder train_subword_embedder(
      const std::vector<std::vector<std::string>>& corpus, const SubwordConfig& config);

  std::size_t bucket_of(std::string_view ngram) const;

  SubwordConfig config_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> word_index_;
  std::vector<float> input_;   // (words + buckets) x dimension
  std::vector<float> output_;  // words x dimension
  std::vector<float> shift_;
  std::vector<float> scale_;
};

/// Throws Error when the corpus has no tokens.
SubwordHashEmbedder train_subword_embedder(const std::vector<std::vector<std::string>>& corpus,
                                           const SubwordConfig& config);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

}  // namespace codeshield
