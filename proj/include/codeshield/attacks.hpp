// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Poisoning transformations: trigger renames, dead-code insertion, and two
// black-box attacks (MHM sampling and CodeFooler substitution) that query a
// victim classifier.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeshield/corpus.hpp"
#include "codeshield/java_source.hpp"
#include "codeshield/subword.hpp"

namespace codeshield {

inline constexpr std::string_view kNamePlaceholder = "${name}";

const std::vector<std::string>& default_trigger_vocabulary();
const std::vector<std::string>& default_dead_code_templates();

struct AttackConfig {
  Attack strategy = Attack::trigger_rename;
  std::size_t max_iterations = 100;
  std::size_t candidate_pool_size = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> trigger_vocabulary = default_trigger_vocabulary();
  std::vector<std::string> dead_code_templates = default_dead_code_templates();

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

// ---------------------------------------------------------------- victim

/// Black-box classifier over normalized token streams.
class VictimOracle {
 public:
  virtual ~VictimOracle() = default;

  virtual const std::vector<std::string>& classes() const = 0;
  virtual std::vector<double> probabilities(std::span<const std::string> stream) const = 0;

  std::size_t num_classes() const { return classes().size(); }
  std::optional<std::size_t> class_index(std::string_view name) const;

  /// Class of a method: the first subword of its name, if the victim knows it.
  std::optional<std::size_t> true_class(const ParsedMethod& method) const;

  std::vector<double> probabilities(const ParsedMethod& method) const;
  double probability(const ParsedMethod& method, std::size_t cls) const;
  std::size_t predict(const ParsedMethod& method) const;
};

/// Normalized stream the victim sees: every token except the method name.
std::vector<std::string> victim_stream(const ParsedMethod& method);

/// Same stream split per token, so callers can delete whole tokens.
std::vector<std::vector<std::string>> victim_token_groups(const ParsedMethod& method);

/// First subword of the method name ("getUserName" -> "get").
std::string method_class(std::string_view method_name);

/// Softmax regression on log(1 + count) bag-of-subword features.
class LinearVictim final : public VictimOracle {
 public:
  const std::vector<std::string>& classes() const override { return classes_; }
  std::vector<double> probabilities(std::span<const std::string> stream) const override;
  using VictimOracle::probabilities;

  const std::vector<std::string>& features() const { return features_; }
  double training_accuracy() const { return training_accuracy_; }
  /// Weight of (class, feature); zero for unknown features.
  double weight(std::size_t cls, std::string_view feature) const;

  void save(const std::filesystem::path& path) const;
  static LinearVictim load(const std::filesystem::path& path);

 private:
  friend LinearVictim train_toy_victim(std::span<const CodeSample* const> samples,
                                       std::size_t num_classes, std::uint64_t seed);
  std::vector<std::string> classes_;
  std::vector<std::string> features_;
  std::map<std::string, std::size_t, std::less<>> feature_index_;
  std::vector<float> weights_;  // classes x features
  std::vector<float> bias_;
  double training_accuracy_ = 0.0;
};

/// Trains on the `num_classes` most frequent method classes. Throws Error
/// when fewer classes exist.
LinearVictim train_toy_victim(std::span<const CodeSample* const> samples, std::size_t num_classes,
                              std::uint64_t seed);

// ---------------------------------------------------------------- primitives

/// Renames every non-member occurrence of `old_name`. Identity when the names
/// match. Throws Error when `old_name` is not in the identifier table or
/// `new_name` is illegal or already used.
CodeSample rename_identifier(const CodeSample& sample, std::string_view old_name,
                             std::string_view new_name);

/// Instantiates `templ` with a fresh name drawn from `names` (up to 10 draws)
/// and inserts it before body statement `position` (== statement count means
/// after the last statement).
CodeSample insert_dead_code(const CodeSample& sample, std::string_view templ,
                            std::size_t position, std::span<const std::string> names,
                            std::uint64_t seed);

/// Re-applies a transform log to a clean source.
std::string replay_transform_log(const std::string& clean_source,
                                 std::span<const TransformRecord> log);

// ---------------------------------------------------------------- attacks

struct MhStep {
  std::string source;
  std::string target;
  double p_true_current = 0.0;
  double p_true_proposed = 0.0;
  double acceptance = 0.0;
  bool accepted = false;
};

struct PoisonResult {
  CodeSample sample;
  std::size_t iterations_used = 0;
  bool flipped = false;
  std::vector<MhStep> mh_trace;  // MHM only

  const std::vector<TransformRecord>& transformations() const { return sample.transform_log; }
};

/// min(1, (1 - p') / (1 - p)), the denominator floored at 1e-12.
double mhm_acceptance(double p_true_current, double p_true_proposed);

/// Identifiers available as rename targets: the renameable names of `samples`,
/// sorted and unique.
std::vector<std::string> identifier_vocabulary(std::span<const CodeSample* const> samples);

PoisonResult trigger_rename_attack(const CodeSample& sample, const AttackConfig& config);
PoisonResult dead_code_attack(const CodeSample& sample, const AttackConfig& config);

PoisonResult mhm_attack(const CodeSample& sample, const VictimOracle& oracle,
                        std::span<const std::string> vocabulary, const AttackConfig& config);

struct RankedIdentifier {
  std::string name;
  double importance = 0.0;
  std::size_t first_position = 0;
};

/// Importance = P(true|x) - P(true|x without the identifier's tokens).
std::vector<RankedIdentifier> codefooler_rank(const ParsedMethod& method,
                                              const VictimOracle& oracle);

/// Cosine nearest neighbours among a fixed identifier vocabulary, in the
/// subword embedder's space.
class IdentifierNeighbors {
 public:
  IdentifierNeighbors(const SubwordHashEmbedder& embedder, std::vector<std::string> vocabulary);

  std::vector<float> vector_of(std::string_view identifier) const;

  struct Neighbor {
    std::string name;
    double similarity = 0.0;
  };
  /// The k most similar vocabulary entries accepted by `allowed`, in
  /// descending similarity (ties by vocabulary order).
  template <class Pred>
  std::vector<Neighbor> nearest(std::string_view query, std::size_t k, Pred allowed) const;

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

 private:
  std::vector<Neighbor> scored(std::string_view query) const;
  const SubwordHashEmbedder* embedder_;
  std::vector<std::string> vocabulary_;
  std::vector<std::vector<float>> vectors_;
};

template <class Pred>
std::vector<IdentifierNeighbors::Neighbor> IdentifierNeighbors::nearest(std::string_view query,
                                                                         std::size_t k,
                                                                         Pred allowed) const {
  std::vector<Neighbor> out;
  for (auto& n : scored(query)) {
    if (out.size() == k) break;
    if (allowed(n.name)) out.push_back(std::move(n));
  }
  return out;
}

PoisonResult codefooler_attack(const CodeSample& sample, const VictimOracle& oracle,
                               const IdentifierNeighbors& neighbors, const AttackConfig& config);

struct AttackResources {
  const VictimOracle* victim = nullptr;
  const IdentifierNeighbors* neighbors = nullptr;
  std::vector<std::string> vocabulary;
};

/// Dispatches on config.strategy. Throws Error when a required resource is
/// missing or the sample cannot be attacked.
PoisonResult run_attack(const CodeSample& sample, const AttackConfig& config,
                        const AttackResources& resources);

/// Carves disjoint parts out of the clean entries and poisons each with its
/// strategy. Samples whose attack fails or yields no transformation are
/// replaced by the next clean sample. The clean source of every poisoned
/// entry is kept in manifest.origins. Throws Error when clean samples run out.
DatasetManifest poison_dataset(const DatasetManifest& manifest,
                               const std::map<Attack, std::size_t>& mix,
                               const std::map<Attack, AttackConfig>& configs,
                               const AttackResources& resources, std::uint64_t seed);

}  // namespace codeshield
