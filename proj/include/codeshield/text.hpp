// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Text normalization for the subword embedder and the victim classifier.
// Normalized streams are derived views; they are never written back into
// source code.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeshield/java_source.hpp"

namespace codeshield {

/// camelCase / PascalCase / snake_case / digits split into lowercase subwords.
/// "getUserName" -> {"get", "user", "name"}, "HTTPServer2" -> {"http", "server"}.
std::vector<std::string> split_identifier(std::string_view identifier);

/// English stop words plus the non-primitive Java keywords.
bool is_stop_word(std::string_view word);

/// Normalizes one lexed token into zero or more subwords.
void normalize_token(const TokenStream& tokens, std::size_t index,
                     std::vector<std::string>& out);

/// Lowercase, tokenize, drop punctuation/numbers/stop words, split compound
/// identifiers. No rare-word filtering (that needs corpus statistics).
std::vector<std::string> preprocess_text(std::string_view source);
std::vector<std::string> preprocess_tokens(const TokenStream& tokens);

/// Normalizes a corpus and drops tokens whose corpus frequency is below
/// `rare_floor`.
std::vector<std::vector<std::string>> normalize_corpus(std::span<const std::string> sources,
                                                       std::size_t rare_floor = 2);

}  // namespace codeshield
