// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

namespace codeshield {

namespace {

// Short standard English list; anything here never reaches an embedder.
constexpr std::array<std::string_view, 75> kEnglishStopWords = {
    "a",     "about", "above", "after", "again", "all",   "am",    "an",    "and",
    "any",   "are",   "as",    "at",    "be",    "been",  "before", "being", "below",
    "both",  "but",   "by",    "could", "did",   "does",  "doing", "down",  "during",
    "each",  "few",   "from",  "further", "had", "has",   "have",  "having", "he",
    "her",   "here",  "him",   "his",   "how",   "i",     "in",    "into",  "it",
    "its",   "me",    "more",  "most",  "my",    "no",    "nor",   "not",   "of",
    "off",   "on",    "once",  "only",  "or",    "other", "our",   "out",   "over",
    "own",   "same",  "she",   "should", "so",   "some",  "such",  "than",  "that",
    "the",   "then",  "to"};

constexpr std::array<std::string_view, 20> kMoreStopWords = {
    "too",  "under", "until", "up",   "very",  "was",  "we",   "were", "what", "when",
    "where", "which", "who",  "whom", "why",   "will", "with", "you",  "your", "they"};

bool is_english_stop_word(std::string_view w) {
  return std::find(kEnglishStopWords.begin(), kEnglishStopWords.end(), w) !=
             kEnglishStopWords.end() ||
         std::find(kMoreStopWords.begin(), kMoreStopWords.end(), w) != kMoreStopWords.end();
}

}  // namespace

std::vector<std::string> split_identifier(std::string_view identifier) {
  std::vector<std::string> parts;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) parts.push_back(std::move(current));
    current.clear();
  };
  const std::size_t n = identifier.size();
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char c = static_cast<unsigned char>(identifier[i]);
    if (!std::isalpha(c)) {
      // underscores, dollars and digits separate subwords and are dropped
      flush();
      continue;
    }
    if (std::isupper(c) && !current.empty()) {
      const unsigned char prev = static_cast<unsigned char>(identifier[i - 1]);
      const bool next_lower =
          i + 1 < n && std::islower(static_cast<unsigned char>(identifier[i + 1]));
      // "userName" splits before N; "HTTPServer" splits before the S of Server.
      if (std::islower(prev) || (std::isupper(prev) && next_lower)) flush();
    }
    current.push_back(static_cast<char>(std::tolower(c)));
  }
  flush();
  return parts;
}

bool is_stop_word(std::string_view word) {
  if (is_english_stop_word(word)) return true;
  // Primitive type names carry signal and are kept.
  return is_reserved_word(word) && !is_primitive_type(word);
}

void normalize_token(const TokenStream& tokens, std::size_t index, std::vector<std::string>& out) {
  const Token& tok = tokens[index];
  const std::string_view text = tokens.text(index);
  switch (tok.kind) {
    case TokenKind::punctuation:
      return;
    case TokenKind::keyword:
      if (!is_stop_word(text)) out.emplace_back(text);
      return;
    case TokenKind::identifier:
      for (auto& part : split_identifier(text))
        if (!is_stop_word(part)) out.push_back(std::move(part));
      return;
    case TokenKind::literal: {
      // Numbers and booleans/null drop out; string contents contribute words.
      if (text.empty() || (text[0] != '"' && text[0] != '\'')) return;
      for (auto& part : split_identifier(text))
        if (!is_stop_word(part)) out.push_back(std::move(part));
      return;
    }
  }
}

std::vector<std::string> preprocess_tokens(const TokenStream& tokens) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) normalize_token(tokens, i, out);
  return out;
}

std::vector<std::string> preprocess_text(std::string_view source) {
  return preprocess_tokens(tokenize(std::string(source)));
}

std::vector<std::vector<std::string>> normalize_corpus(std::span<const std::string> sources,
                                                       std::size_t rare_floor) {
  std::vector<std::vector<std::string>> streams;
  streams.reserve(sources.size());
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& src : sources) {
    streams.push_back(preprocess_text(src));
    for (const auto& w : streams.back()) ++freq[w];
  }
  for (auto& stream : streams)
    std::erase_if(stream, [&](const std::string& w) { return freq[w] < rare_floor; });
  return streams;
}

}  // namespace codeshield
