// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration and the on-disk pipeline stages driven by the CLI.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeshield/common.hpp"
#include "codeshield/corpus.hpp"
#include "codeshield/detector.hpp"
#include "codeshield/features.hpp"
#include "codeshield/paths.hpp"
#include "codeshield/subword.hpp"

namespace codeshield {

struct RunConfig {
  // paths
  std::string corpus;  // JSONL file, directory of .java files, or "synthetic:N"
  std::filesystem::path workdir;
  std::filesystem::path contextual_file;  // empty: seeded stub
  std::filesystem::path perplexity_file;  // empty: built-in n-gram model

  std::uint64_t seed = 1;

  // corpus
  std::size_t corpus_limit = 0;
  double unseen_fraction = 0.2;
  SplitRatios split;

  // poisoning
  double poison_fraction = 0.5;
  std::map<Attack, double> attack_mix;
  std::size_t max_iterations = 100;
  std::size_t candidate_pool_size = 10;
  std::size_t victim_classes = 12;

  SubwordConfig subword;
  PathEmbedderConfig paths;
  FeatureMode feature_mode = FeatureMode::only_embeddings;
  DetectorConfig detector;

  std::size_t onion_order = 3;
  double onion_k = 0.1;
  double onion_quantile = 0.95;

  std::size_t histogram_bins = 10;
  std::size_t saliency_samples = 20;
  std::vector<FeatureMode> ablation_modes;
  std::vector<Attack> loao_attacks;
};

/// Every accepted key with its default value.
nlohmann::json default_config_json();

/// Applies "a.b.c=value" overrides; the value is parsed as JSON when it
/// parses, otherwise taken as a string. Throws ConfigError on a malformed
/// override.
void apply_overrides(nlohmann::json& config, const std::vector<std::string>& overrides);

/// All violations in `config` (unknown keys, wrong types, bad ratios,
/// missing paths, invalid sub-configs). Empty when valid.
std::vector<std::string> validate_config_json(const nlohmann::json& config);

/// Reads the file, applies overrides and validates. An unreadable or
/// unparsable file yields a single diagnostic.
std::vector<std::string> validate_config(const std::filesystem::path& path,
                                         const std::vector<std::string>& overrides = {});

/// Throws ConfigError listing every diagnostic.
RunConfig parse_run_config(const nlohmann::json& config);
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

/// A pipeline failure attributed to a stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Runs pipeline stages against a work directory. Each stage reads its
/// inputs from earlier stages' outputs, writes files only under its own
/// subdirectory (never overwriting), records them in
/// `<stage>/artifacts.json`, and returns a JSON summary.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  const RunConfig& config() const { return config_; }

  nlohmann::json ingest();
  nlohmann::json train_victim();
  nlohmann::json train_embedders();
  nlohmann::json poison();
  nlohmann::json embed();
  nlohmann::json train_detector();
  nlohmann::json evaluate();
  nlohmann::json onion();
  nlohmann::json loao();
  nlohmann::json ablate();
  /// ingest, train-victim, train-embedders, poison, embed, train-detector, evaluate.
  nlohmann::json full();
  /// Scores one method read from a .java file or a JSON {"source"} file.
  nlohmann::json detect(const std::filesystem::path& input) const;

  std::filesystem::path stage_dir(const std::string& stage) const;

 private:
  RunConfig config_;
};

}  // namespace codeshield
