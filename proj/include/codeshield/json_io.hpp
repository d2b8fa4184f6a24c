// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// File formats: JSONL records for samples and features, and the binary
// checkpoint container (one JSON header line, then row-major little-endian
// float32 blobs in header order).

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeshield/corpus.hpp"

namespace codeshield {

nlohmann::json sample_to_json(const CodeSample& sample);
CodeSample sample_from_json(const nlohmann::json& record);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

/// Parses every non-empty, non-'#' line of a JSONL file.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

struct Blob {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string format;  // e.g. "codeshield.detector"
  int version = 1;
  nlohmann::json meta;  // format-specific header fields
  std::vector<Blob> blobs;

  const Blob& blob(std::string_view name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws Error when the header is corrupt, the format differs from
/// `expected_format`, or the version differs from `expected_version`.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::string_view expected_format,
                           int expected_version);

}  // namespace codeshield
