// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Path contexts over a shallow statement/expression tree, and an attention
// model that pools them into a code vector while predicting the method class.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "codeshield/corpus.hpp"
#include "codeshield/java_source.hpp"

namespace codeshield {

/// Tree built from the method body: statements, bracket groups and leaves.
/// Leaves are identifier and literal tokens.
struct SyntaxTree {
  struct Node {
    std::string label;
    int parent = -1;
    std::size_t depth = 0;
    std::vector<int> children;
    std::string terminal;  // leaves only
  };
  std::vector<Node> nodes;  // nodes[0] is the root
  std::vector<int> leaves;  // in token order

  /// Node labels from leaf a up to the common ancestor and down to leaf b,
  /// e.g. "Name^Decl_Num". `length` receives the number of nodes on it.
  std::string path(int a, int b, std::size_t* length = nullptr) const;
};

SyntaxTree build_syntax_tree(const ParsedMethod& method);

struct PathContext {
  std::string left;
  std::string path;
  std::string right;

  auto operator<=>(const PathContext&) const = default;
  bool operator==(const PathContext&) const = default;
};

/// Every leaf pair (in token order) whose path has at most `max_length`
/// nodes, sorted lexicographically and truncated to `max_paths`.
std::vector<PathContext> extract_ast_paths(const ParsedMethod& method, std::size_t max_paths,
                                           std::size_t max_length);
std::vector<PathContext> extract_ast_paths(const CodeSample& sample, std::size_t max_paths,
                                           std::size_t max_length);

inline constexpr std::string_view kNullClass = "<null>";

struct PathEmbedderConfig {
  std::size_t embedding_dim = 64;  // terminal and path embeddings
  std::size_t code_dim = 128;
  std::size_t max_paths = 200;
  std::size_t max_length = 9;
  std::size_t epochs = 8;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;

  bool operator==(const PathEmbedderConfig&) const = default;
};

class PathContextEmbedder {
 public:
  struct Output {
    std::vector<float> code;         // code_dim
    std::vector<double> attention;   // one weight per context
    std::vector<double> class_probs;
  };

  const PathEmbedderConfig& config() const { return config_; }
  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t code_dim() const { return config_.code_dim; }

  Output forward(std::span<const PathContext> contexts) const;
  std::vector<float> code_vector(const ParsedMethod& method) const;

  /// Ten highest-scoring classes in descending order, padded with <null>/0.
  std::vector<std::pair<std::string, double>> top_predictions(
      std::span<const PathContext> contexts, std::size_t k = 10) const;

  void save(const std::filesystem::path& path) const;
  static PathContextEmbedder load(const std::filesystem::path& path);

  bool operator==(const PathContextEmbedder&) const = default;

 private:
  friend PathContextEmbedder train_path_embedder(std::span<const CodeSample* const> samples,
                                                 const PathEmbedderConfig& config,
                                                 double* train_accuracy);
  struct Indexed {
    std::vector<std::size_t> left, path, right;
  };
  Indexed index(std::span<const PathContext> contexts) const;

  PathEmbedderConfig config_;
  std::vector<std::string> classes_;
  std::vector<std::string> terminals_;  // [0] = <unk>
  std::vector<std::string> paths_;      // [0] = <unk>
  std::unordered_map<std::string, std::size_t> terminal_index_;
  std::unordered_map<std::string, std::size_t> path_index_;

  // Parameters (float storage).
  std::vector<float> terminal_emb_;  // terminals x E
  std::vector<float> path_emb_;      // paths x E
  std::vector<float> w_;             // code_dim x 3E
  std::vector<float> attention_;     // code_dim
  std::vector<float> out_w_;         // classes x code_dim
  std::vector<float> out_b_;         // classes
};

/// Class of a sample = first subword of its method name. Throws Error when
/// fewer than two classes are present.
PathContextEmbedder train_path_embedder(std::span<const CodeSample* const> samples,
                                        const PathEmbedderConfig& config,
                                        double* train_accuracy = nullptr);

}  // namespace codeshield
