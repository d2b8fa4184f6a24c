// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Token-level Java method parsing.
//
// This is not a Java grammar. It lexes a single method, checks bracket
// balance, and classifies identifiers into method name / parameters / locals
// using declaration patterns (a type followed by a fresh name). That is all
// the attacks and embedders need.

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace codeshield {

enum class TokenKind { identifier, keyword, literal, punctuation };

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::punctuation;
  std::size_t trivia_begin = 0;  // start of the whitespace/comments preceding the token
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Lexed source. Tokens partition the source: for every token,
/// source[trivia_begin, end) is contiguous with the previous token's range,
/// and source[trailing_trivia_begin, size) holds what follows the last token.
class TokenStream {
 public:
  TokenStream() = default;
  TokenStream(std::string source, std::vector<Token> tokens, std::size_t trailing);

  const std::string& source() const { return source_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }

  std::string_view text(std::size_t i) const;
  std::string_view leading_trivia(std::size_t i) const;
  std::string_view trailing_trivia() const;

  bool is(std::size_t i, std::string_view punct_or_keyword) const;
  bool is_identifier(std::size_t i) const;

  /// True when identifier token i is a member selection (`x.name`), which
  /// renames must not touch.
  bool is_member_access(std::size_t i) const;

  /// Concatenation of all trivia and token text; equals source().
  std::string reconstruct() const;

 private:
  std::string source_;
  std::vector<Token> tokens_;
  std::size_t trailing_ = 0;
};

/// Throws ParseError on unterminated strings or comments.
TokenStream tokenize(std::string source);

bool is_reserved_word(std::string_view word);
bool is_primitive_type(std::string_view word);
bool is_legal_identifier(std::string_view word);

struct IdentifierTable {
  std::string method_name;
  std::vector<std::string> parameters;
  std::vector<std::string> locals;
  // identifier -> indices of its (non member-access) identifier tokens
  std::map<std::string, std::vector<std::size_t>> occurrences;

  /// Parameters followed by locals: the identifiers attacks may rename.
  std::vector<std::string> renameable() const;
  bool contains(std::string_view name) const;
};

struct ParsedMethod {
  TokenStream tokens;
  IdentifierTable identifiers;
  std::size_t name_token = 0;
  std::size_t params_open = 0;
  std::size_t params_close = 0;
  std::size_t body_open = 0;
  std::size_t body_close = 0;
  // token index of the first token of every top-level body statement
  std::vector<std::size_t> statement_starts;

  std::size_t statement_count() const { return statement_starts.size(); }
};

/// Throws ParseError for empty input, unbalanced brackets, or a missing
/// signature/body.
ParsedMethod parse_method(std::string source);

/// Number of identifier tokens with exactly this text that are not member
/// selections.
std::size_t count_occurrences(const TokenStream& tokens, std::string_view identifier);

/// True when a non-member identifier token spells `name`. Member selections
/// (`x.name`) live in another namespace and do not block a rename to `name`.
bool mentions_identifier(const TokenStream& tokens, std::string_view name);

}  // namespace codeshield
