// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Detector input vectors: concatenated embedding segments.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "codeshield/contextual.hpp"
#include "codeshield/corpus.hpp"
#include "codeshield/paths.hpp"
#include "codeshield/subword.hpp"

namespace codeshield {

enum class FeatureMode { only_embeddings, all_features, single_path, single_contextual, single_text };

std::string_view to_string(FeatureMode mode);
/// Accepts "only_embeddings", "all_features", "single:path",
/// "single:contextual" and "single:text".
FeatureMode parse_feature_mode(std::string_view text);

struct FeatureSegment {
  std::string name;
  std::size_t length = 0;
  bool operator==(const FeatureSegment&) const = default;
};

struct FeatureLayout {
  std::string config;  // mode plus segment sizes, e.g. "only_embeddings:128+768+100+100"
  std::vector<FeatureSegment> segments;

  std::size_t size() const;
  /// Offset of a named segment; throws Error when absent.
  std::size_t offset(std::string_view segment) const;
  bool operator==(const FeatureLayout&) const = default;
};

struct FeatureVector {
  std::string id;
  std::vector<float> values;
};

struct Embedders {
  const SubwordHashEmbedder* subword = nullptr;
  const PathContextEmbedder* paths = nullptr;
  const ContextualAdapter* contextual = nullptr;
};

/// Throws Error when an embedder the mode needs is missing.
FeatureLayout feature_layout(FeatureMode mode, const Embedders& embedders);

FeatureVector assemble_features(const CodeSample& sample, const Embedders& embedders,
                                FeatureMode mode);

/// assemble_features over many samples, in parallel, output in input order.
std::vector<FeatureVector> assemble_all(const std::vector<const CodeSample*>& samples,
                                        const Embedders& embedders, FeatureMode mode);

/// Copies the named segments out of vectors built under `from`.
std::vector<FeatureVector> select_segments(const std::vector<FeatureVector>& vectors,
                                           const FeatureLayout& from, const FeatureLayout& to);

/// JSON lines {"id", "config", "values"}.
void write_features(const std::filesystem::path& path, const FeatureLayout& layout,
                    const std::vector<FeatureVector>& vectors);
/// Returns the vectors; `layout` receives the segment layout stored next to
/// the file (`<path>.layout.json`).
std::vector<FeatureVector> read_features(const std::filesystem::path& path,
                                         FeatureLayout* layout = nullptr);

}  // namespace codeshield
