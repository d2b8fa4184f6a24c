// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// 768-dimensional snippet vectors, either read from a sidecar file produced
// by an external transformer or computed by a seeded random projection.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "codeshield/corpus.hpp"

namespace codeshield {

inline constexpr std::size_t kContextualDim = 768;

class ContextualAdapter {
 public:
  enum class Source { deterministic_stub, external_file };

  /// Sum of seeded Rademacher vectors over token 1..3-gram counts,
  /// L2-normalized. Pure function of the token stream and seed.
  static ContextualAdapter stub(std::uint64_t seed);

  /// Reads a JSON-lines sidecar of {"id", "values": [768 floats]}.
  static ContextualAdapter from_file(const std::filesystem::path& path);

  Source source() const { return source_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<float> embed(const CodeSample& sample) const;

  /// Throws Error listing every id that has no vector (external mode).
  void require(const std::vector<const CodeSample*>& samples) const;

 private:
  Source source_ = Source::deterministic_stub;
  std::uint64_t seed_ = 0;
  std::map<std::string, std::vector<float>> vectors_;
};

void write_contextual_file(const std::filesystem::path& path,
                           const std::map<std::string, std::vector<float>>& vectors);

}  // namespace codeshield
