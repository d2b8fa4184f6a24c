// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Leave-one-out perplexity trigger detection with a pluggable perplexity
// oracle (built-in add-k n-gram model or an external per-sequence file).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "codeshield/corpus.hpp"

namespace codeshield {

class NGramLM {
 public:
  static constexpr std::string_view kUnknown = "<unk>";
  static constexpr std::string_view kPad = "<s>";

  std::size_t order() const { return order_; }
  double smoothing() const { return k_; }
  /// Predictable tokens, <unk> included; <s> is context-only.
  const std::vector<std::string>& vocabulary() const { return vocab_; }

  /// P(token | context) with add-k smoothing. Only the last order-1 context
  /// tokens are used; shorter contexts are left-padded with <s>.
  double probability(std::span<const std::string> context, std::string_view token) const;

  /// exp of the mean negative log conditional probability. Throws on empty input.
  double perplexity(std::span<const std::string> tokens) const;
  /// Same, with token `skip` left out of the sequence.
  double perplexity_without(std::span<const std::string> tokens, std::size_t skip) const;

 private:
  friend NGramLM train_ngram_lm(const std::vector<std::vector<std::string>>& corpus,
                                std::size_t order, double k);
  std::uint32_t id(std::string_view token) const;
  double probability_ids(const std::uint32_t* context, std::uint32_t token) const;
  double perplexity_ids(const std::vector<std::uint32_t>& ids) const;
  std::vector<std::uint32_t> encode(std::span<const std::string> tokens, std::size_t skip) const;

  std::size_t order_ = 3;
  double k_ = 0.1;
  std::vector<std::string> vocab_;  // [0] = <unk>
  std::uint32_t pad_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
  // Keyed by packed token ids: n-gram counts and their context totals.
  std::unordered_map<std::string, std::uint64_t> gram_counts_;
  std::unordered_map<std::string, std::uint64_t> context_counts_;
};

/// Throws Error on an empty corpus or order 0.
NGramLM train_ngram_lm(const std::vector<std::vector<std::string>>& corpus, std::size_t order = 3,
                       double k = 0.1);

class PerplexityOracle {
 public:
  virtual ~PerplexityOracle() = default;
  /// Perplexity of `tokens` with token `removed` left out (-1: full sequence).
  virtual double perplexity(std::string_view id, std::span<const std::string> tokens,
                            long removed) const = 0;
};

class NGramOracle : public PerplexityOracle {
 public:
  explicit NGramOracle(const NGramLM& lm) : lm_(lm) {}
  double perplexity(std::string_view id, std::span<const std::string> tokens,
                    long removed) const override;

 private:
  const NGramLM& lm_;
};

/// Reads JSON lines {"id", "token_index_removed", "perplexity"}.
class FilePerplexityOracle : public PerplexityOracle {
 public:
  static FilePerplexityOracle from_file(const std::filesystem::path& path);
  double perplexity(std::string_view id, std::span<const std::string> tokens,
                    long removed) const override;

 private:
  std::map<std::pair<std::string, long>, double> values_;
};

struct TriggerReport {
  std::vector<double> scores;  // f_i = ppl(full) - ppl(without i)
  std::vector<std::size_t> flagged;
  Label verdict = Label::clean;
  double threshold = 0;
};

/// Code-token texts ONION scores.
std::vector<std::string> onion_tokens(const CodeSample& sample);

/// Indices of tokens introduced by the sample's transform log: occurrences
/// of renamed-to identifiers and tokens inside inserted statements.
std::vector<std::size_t> trigger_token_indices(const CodeSample& sample);

/// Per-token suspicion scores f_i. Throws Error for fewer than 2 tokens.
std::vector<double> suspicion_scores(std::string_view id, std::span<const std::string> tokens,
                                     const PerplexityOracle& oracle);

TriggerReport onion_detect(std::string_view id, std::span<const std::string> tokens,
                           const PerplexityOracle& oracle, double threshold);
/// Re-thresholds precomputed scores.
TriggerReport onion_detect(std::vector<double> scores, double threshold);

/// Linear-interpolation quantile (q in [0, 1]). Throws on empty input.
double quantile(std::vector<double> values, double q);

/// Quantile q of the pooled f_i over clean held-out samples.
double calibrate_threshold(const std::vector<const CodeSample*>& clean,
                           const PerplexityOracle& oracle, double q = 0.95);

}  // namespace codeshield
