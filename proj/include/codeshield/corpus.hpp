// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Code samples, dataset manifests, deduplication and stratified splitting.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "codeshield/common.hpp"

namespace codeshield {

enum class Label { clean, poisoned };
enum class Attack { none, trigger_rename, dead_code, mhm, codefooler };
enum class Split { unassigned, train, val, test, unseen };

inline constexpr std::array<Attack, 4> kAllAttacks = {Attack::trigger_rename, Attack::dead_code,
                                                      Attack::mhm, Attack::codefooler};

std::string_view to_string(Label v);
std::string_view to_string(Attack v);
std::string_view to_string(Split v);
Label parse_label(std::string_view s);
Attack parse_attack(std::string_view s);
Split parse_split(std::string_view s);

/// One step of a poisoning transformation. For renames `position` is the
/// first token index touched; for insertions it is the character offset.
struct TransformRecord {
  std::string kind;  // "rename" | "insert"
  std::string old_text;
  std::string new_text;
  std::size_t position = 0;
  std::optional<double> similarity;  // embedding similarity of substitutions

  bool operator==(const TransformRecord&) const = default;
};

struct CodeSample {
  std::string id;
  std::string source;
  Label label = Label::clean;
  Attack attack = Attack::none;
  Split split = Split::unassigned;
  // Poisoned samples only.
  std::string origin_id;
  std::vector<TransformRecord> transform_log;

  bool operator==(const CodeSample&) const = default;
};

/// Content hash of the whitespace-normalized source; also the dedup key.
std::string sample_id(std::string_view source);

CodeSample make_clean_sample(std::string source);

struct ManifestCounts {
  // (label, attack, split) -> count
  std::map<std::tuple<Label, Attack, Split>, std::size_t> cells;

  std::size_t total() const;
  std::size_t count(std::optional<Label> label, std::optional<Attack> attack,
                    std::optional<Split> split) const;
  bool operator==(const ManifestCounts&) const = default;
};

struct DatasetManifest {
  std::vector<CodeSample> entries;
  std::uint64_t seed = 0;
  std::string provenance;
  // origin id -> clean source, for poisoned entries whose origin is not itself an entry
  std::map<std::string, std::string> origins;

  ManifestCounts counts() const;
  /// Throws Error when ids repeat or a clean/attack tag pair is inconsistent.
  void validate() const;
  std::vector<const CodeSample*> select(std::optional<Label> label, std::optional<Attack> attack,
                                        std::optional<Split> split) const;
};

struct IngestStats {
  std::size_t files_read = 0;
  std::size_t skipped = 0;      // unreadable or unparsable inputs
  std::size_t duplicates = 0;
};

/// Reads a directory of `.java` method files or a JSONL file of
/// {"id","source"} records. Throws Error("empty corpus") when nothing usable
/// remains. `limit` = 0 means no limit.
DatasetManifest ingest_corpus(const std::filesystem::path& root, std::size_t limit = 0,
                              IngestStats* stats = nullptr);

/// Keeps the first occurrence of every id; preserves order.
std::vector<CodeSample> deduplicate(std::vector<CodeSample> samples);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Stratified by (label, attack). Within a stratum samples are ordered by a
/// seeded hash of their id, then dealt to the split with the largest quota
/// deficit, which keeps every split within one sample of ratio * N.
/// Throws ConfigError when the ratios do not sum to 1.
DatasetManifest split_dataset(DatasetManifest manifest, SplitRatios ratios, std::uint64_t seed);

/// JSON-lines manifest; seed, provenance and counts go to `<path>.meta.json`,
/// origin sources of poisoned entries to `<path>.origins.jsonl`.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace codeshield
