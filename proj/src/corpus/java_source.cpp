// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/java_source.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "codeshield/common.hpp"

namespace codeshield {

namespace {

constexpr std::array<std::string_view, 53> kReserved = {
    "abstract",  "assert",       "boolean",   "break",      "byte",      "case",
    "catch",     "char",         "class",     "const",      "continue",  "default",
    "do",        "double",       "else",      "enum",       "extends",   "final",
    "finally",   "float",        "for",       "goto",       "if",        "implements",
    "import",    "instanceof",   "int",       "interface",  "long",      "native",
    "new",       "package",      "private",   "protected",  "public",    "return",
    "short",     "static",       "strictfp",  "super",      "switch",    "synchronized",
    "this",      "throw",        "throws",    "transient",  "try",       "void",
    "volatile",  "while",        "true",      "false",      "null"};

constexpr std::array<std::string_view, 8> kPrimitives = {"boolean", "byte", "char",  "short",
                                                         "int",     "long", "float", "double"};

// Longest first so greedy matching works.
constexpr std::array<std::string_view, 37> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",   ">=",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "<<", ">>", "(",
    ")",    "{",   "}",   "[",   "]",   ";",  ",",  ".",  "@",  "=",  "?"};

constexpr std::string_view kSingleOps = "<>!~:+-*/&|^%";

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_part(unsigned char c) { return ident_start(c) || std::isdigit(c); }

std::size_t skip_trivia(const std::string& s, std::size_t i) {
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (s.compare(i, 2, "//") == 0) {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (s.compare(i, 2, "/*") == 0) {
      const auto close = s.find("*/", i + 2);
      if (close == std::string::npos) throw ParseError("unterminated block comment");
      i = close + 2;
    } else {
      break;
    }
  }
  return i;
}

std::size_t scan_quoted(const std::string& s, std::size_t i, char quote) {
  if (quote == '"' && s.compare(i, 3, "\"\"\"") == 0) {
    const auto close = s.find("\"\"\"", i + 3);
    if (close == std::string::npos) throw ParseError("unterminated text block");
    return close + 3;
  }
  ++i;
  while (i < s.size()) {
    if (s[i] == '\\') {
      i += 2;
      continue;
    }
    if (s[i] == quote) return i + 1;
    if (s[i] == '\n') break;
    ++i;
  }
  throw ParseError("unterminated literal");
}

std::size_t scan_number(const std::string& s, std::size_t i) {
  while (i < s.size()) {
    const char c = s[i];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
      ++i;
    } else if ((c == '+' || c == '-') && i > 0 &&
               (s[i - 1] == 'e' || s[i - 1] == 'E' || s[i - 1] == 'p' || s[i - 1] == 'P') &&
               !(s.size() > 1 && (s[i - 1] == 'e' || s[i - 1] == 'E') && i >= 2 &&
                 (s[i - 2] == 'x' || s[i - 2] == 'X'))) {
      ++i;
    } else {
      break;
    }
  }
  return i;
}

}  // namespace

std::string to_hex(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::keyword: return "keyword";
    case TokenKind::literal: return "literal";
    case TokenKind::punctuation: return "punctuation";
  }
  return "punctuation";
}

bool is_reserved_word(std::string_view word) {
  return std::find(kReserved.begin(), kReserved.end(), word) != kReserved.end();
}

bool is_primitive_type(std::string_view word) {
  return std::find(kPrimitives.begin(), kPrimitives.end(), word) != kPrimitives.end();
}

bool is_legal_identifier(std::string_view word) {
  if (word.empty() || !ident_start(static_cast<unsigned char>(word[0]))) return false;
  for (unsigned char c : word)
    if (!ident_part(c)) return false;
  return !is_reserved_word(word);
}

TokenStream::TokenStream(std::string source, std::vector<Token> tokens, std::size_t trailing)
    : source_(std::move(source)), tokens_(std::move(tokens)), trailing_(trailing) {}

std::string_view TokenStream::text(std::size_t i) const {
  const Token& t = tokens_[i];
  return std::string_view(source_).substr(t.begin, t.end - t.begin);
}

std::string_view TokenStream::leading_trivia(std::size_t i) const {
  const Token& t = tokens_[i];
  return std::string_view(source_).substr(t.trivia_begin, t.begin - t.trivia_begin);
}

std::string_view TokenStream::trailing_trivia() const {
  return std::string_view(source_).substr(trailing_);
}

bool TokenStream::is(std::size_t i, std::string_view punct_or_keyword) const {
  return i < tokens_.size() && tokens_[i].kind != TokenKind::identifier &&
         tokens_[i].kind != TokenKind::literal && text(i) == punct_or_keyword;
}

bool TokenStream::is_identifier(std::size_t i) const {
  return i < tokens_.size() && tokens_[i].kind == TokenKind::identifier;
}

bool TokenStream::is_member_access(std::size_t i) const {
  return i > 0 && is_identifier(i) && (is(i - 1, ".") || is(i - 1, "::"));
}

std::string TokenStream::reconstruct() const {
  std::string out;
  out.reserve(source_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += leading_trivia(i);
    out += text(i);
  }
  out += trailing_trivia();
  return out;
}

TokenStream tokenize(std::string source) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  const std::string& s = source;
  while (true) {
    const std::size_t trivia = pos;
    pos = skip_trivia(s, pos);
    if (pos >= s.size()) {
      return TokenStream(std::move(source), std::move(tokens), trivia);
    }
    Token tok;
    tok.trivia_begin = trivia;
    tok.begin = pos;
    const unsigned char c = static_cast<unsigned char>(s[pos]);
    if (ident_start(c)) {
      while (pos < s.size() && ident_part(static_cast<unsigned char>(s[pos]))) ++pos;
      const std::string_view word(s.data() + tok.begin, pos - tok.begin);
      if (word == "true" || word == "false" || word == "null") {
        tok.kind = TokenKind::literal;
      } else {
        tok.kind = is_reserved_word(word) ? TokenKind::keyword : TokenKind::identifier;
      }
    } else if (std::isdigit(c) ||
               (c == '.' && pos + 1 < s.size() &&
                std::isdigit(static_cast<unsigned char>(s[pos + 1])))) {
      pos = scan_number(s, pos);
      tok.kind = TokenKind::literal;
    } else if (c == '"' || c == '\'') {
      pos = scan_quoted(s, pos, static_cast<char>(c));
      tok.kind = TokenKind::literal;
    } else {
      tok.kind = TokenKind::punctuation;
      std::size_t len = 0;
      for (auto op : kOperators) {
        if (s.compare(pos, op.size(), op) == 0) {
          len = op.size();
          break;
        }
      }
      if (len == 0) {
        if (kSingleOps.find(static_cast<char>(c)) == std::string_view::npos)
          throw ParseError("unexpected character '" + std::string(1, static_cast<char>(c)) +
                           "' at offset " + std::to_string(pos));
        len = 1;
      }
      pos += len;
    }
    tok.end = pos;
    tokens.push_back(tok);
  }
}

std::vector<std::string> IdentifierTable::renameable() const {
  std::vector<std::string> out = parameters;
  out.insert(out.end(), locals.begin(), locals.end());
  return out;
}

bool IdentifierTable::contains(std::string_view name) const {
  return occurrences.find(std::string(name)) != occurrences.end();
}

std::size_t count_occurrences(const TokenStream& tokens, std::string_view identifier) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens.is_identifier(i) && !tokens.is_member_access(i) && tokens.text(i) == identifier)
      ++n;
  return n;
}

bool mentions_identifier(const TokenStream& tokens, std::string_view name) {
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens.is_identifier(i) && !tokens.is_member_access(i) && tokens.text(i) == name) return true;
  return false;
}

namespace {

class MethodParser {
 public:
  explicit MethodParser(const TokenStream& ts) : ts_(ts) {}

  void check_balance() const {
    std::vector<char> stack;
    for (std::size_t i = 0; i < ts_.size(); ++i) {
      if (ts_[i].kind != TokenKind::punctuation) continue;
      const auto t = ts_.text(i);
      if (t == "(" || t == "{" || t == "[") {
        stack.push_back(t[0]);
      } else if (t == ")" || t == "}" || t == "]") {
        const char open = t == ")" ? '(' : t == "}" ? '{' : '[';
        if (stack.empty() || stack.back() != open)
          throw ParseError("unbalanced '" + std::string(t) + "' at offset " +
                           std::to_string(ts_[i].begin));
        stack.pop_back();
      }
    }
    if (!stack.empty()) throw ParseError("unbalanced brackets: unclosed '" +
                                         std::string(1, stack.back()) + "'");
  }

  std::size_t matching(std::size_t open) const {
    const auto o = ts_.text(open);
    const std::string_view c = o == "(" ? ")" : o == "{" ? "}" : "]";
    int depth = 0;
    for (std::size_t i = open; i < ts_.size(); ++i) {
      if (ts_.is(i, o)) ++depth;
      if (ts_.is(i, c) && --depth == 0) return i;
    }
    throw ParseError("unbalanced brackets");
  }

  ParsedMethod run() {
    if (ts_.empty()) throw ParseError("empty source");
    check_balance();
    ParsedMethod pm;

    // Signature: first '(' preceded by a non-annotation identifier, before any '{'.
    std::size_t open = ts_.size();
    for (std::size_t i = 1; i < ts_.size(); ++i) {
      if (ts_.is(i, "{")) break;
      if (ts_.is(i, "(") && ts_.is_identifier(i - 1) && !(i >= 2 && ts_.is(i - 2, "@"))) {
        open = i;
        break;
      }
      if (ts_.is(i, "(")) i = matching(i);
    }
    if (open == ts_.size()) throw ParseError("no method signature found");
    pm.name_token = open - 1;
    pm.params_open = open;
    pm.params_close = matching(open);

    std::size_t body = pm.params_close + 1;
    while (body < ts_.size() && !ts_.is(body, "{")) {
      if (ts_.is(body, ";")) throw ParseError("method has no body");
      ++body;
    }
    if (body >= ts_.size()) throw ParseError("method has no body");
    pm.body_open = body;
    pm.body_close = matching(body);
    if (pm.body_close + 1 != ts_.size()) throw ParseError("trailing tokens after method body");

    IdentifierTable& table = pm.identifiers;
    table.method_name = std::string(ts_.text(pm.name_token));
    collect_parameters(pm, table);
    collect_locals(pm, table);
    collect_statements(pm);

    auto add_occurrences = [&](const std::string& name) {
      auto& list = table.occurrences[name];
      for (std::size_t i = 0; i < ts_.size(); ++i)
        if (ts_.is_identifier(i) && !ts_.is_member_access(i) && ts_.text(i) == name)
          list.push_back(i);
    };
    add_occurrences(table.method_name);
    for (const auto& p : table.parameters) add_occurrences(p);
    for (const auto& l : table.locals) add_occurrences(l);
    pm.tokens = ts_;
    return pm;
  }

 private:
  bool known(const IdentifierTable& t, std::string_view name) const {
    if (name == t.method_name) return true;
    return std::find(t.parameters.begin(), t.parameters.end(), name) != t.parameters.end() ||
           std::find(t.locals.begin(), t.locals.end(), name) != t.locals.end();
  }

  void collect_parameters(const ParsedMethod& pm, IdentifierTable& table) const {
    std::size_t last_ident = ts_.size();
    int paren = 0;
    int angle = 0;
    auto flush = [&] {
      if (last_ident != ts_.size()) {
        std::string name(ts_.text(last_ident));
        if (!known(table, name)) table.parameters.push_back(std::move(name));
      }
      last_ident = ts_.size();
    };
    for (std::size_t i = pm.params_open + 1; i < pm.params_close; ++i) {
      if (ts_.is(i, "(")) ++paren;
      if (ts_.is(i, ")")) --paren;
      if (ts_.is(i, "<")) ++angle;
      if (ts_.is(i, ">")) --angle;
      if (ts_.is(i, ">>")) angle -= 2;
      if (ts_.is(i, ">>>")) angle -= 3;
      if (paren == 0 && angle <= 0 && ts_.is(i, ",")) {
        flush();
        angle = 0;
        continue;
      }
      // annotation arguments are skipped
      if (paren == 0 && ts_.is_identifier(i) && !(i > 0 && ts_.is(i - 1, "@"))) last_ident = i;
    }
    flush();
  }

  // Returns the index just past a type expression starting at i, or npos.
  std::size_t match_type(std::size_t i, std::size_t end) const {
    constexpr auto npos = std::string::npos;
    if (i >= end) return npos;
    if (!(ts_.is_identifier(i) || (ts_[i].kind == TokenKind::keyword && is_primitive_type(ts_.text(i)))))
      return npos;
    ++i;
    while (i + 1 < end && ts_.is(i, ".") && ts_.is_identifier(i + 1)) i += 2;
    if (i < end && ts_.is(i, "<")) {
      int depth = 0;
      for (; i < end; ++i) {
        const auto t = ts_.text(i);
        if (t == "<") {
          ++depth;
        } else if (t == ">") {
          --depth;
        } else if (t == ">>") {
          depth -= 2;
        } else if (t == ">>>") {
          depth -= 3;
        } else if (!(ts_.is_identifier(i) || t == "." || t == "," || t == "?" || t == "&" ||
                     t == "[" || t == "]" || t == "extends" || t == "super" ||
                     is_primitive_type(t))) {
          return npos;
        }
        if (depth <= 0) {
          ++i;
          break;
        }
      }
      if (depth > 0) return npos;
    }
    while (i + 1 < end && ts_.is(i, "[") && ts_.is(i + 1, "]")) i += 2;
    return i;
  }

  bool declarator_follows(std::size_t i) const {
    return ts_.is(i, "=") || ts_.is(i, ";") || ts_.is(i, ",") || ts_.is(i, ":") ||
           ts_.is(i, ")") || ts_.is(i, "[");
  }

  void add_local(IdentifierTable& table, std::size_t i) const {
    std::string name(ts_.text(i));
    if (!known(table, name)) table.locals.push_back(std::move(name));
  }

  void collect_locals(const ParsedMethod& pm, IdentifierTable& table) const {
    const std::size_t begin = pm.body_open + 1;
    const std::size_t end = pm.body_close;
    for (std::size_t i = begin; i < end; ++i) {
      // Lambda parameters: `x -> ...` and `(a, b) -> ...`.
      if (ts_.is(i, "->")) {
        if (ts_.is_identifier(i - 1)) {
          add_local(table, i - 1);
        } else if (ts_.is(i - 1, ")")) {
          std::size_t j = i - 1;
          int depth = 0;
          std::vector<std::size_t> names;
          std::size_t last = ts_.size();
          for (; j > begin; --j) {
            if (ts_.is(j, ")")) ++depth;
            if (ts_.is(j, "(") && --depth == 0) break;
            if (depth == 1 && ts_.is_identifier(j) && last == ts_.size()) last = j;
            if (depth == 1 && ts_.is(j, ",")) {
              if (last != ts_.size()) names.push_back(last);
              last = ts_.size();
            }
          }
          if (last != ts_.size()) names.push_back(last);
          std::reverse(names.begin(), names.end());
          for (auto n : names) add_local(table, n);
        }
        continue;
      }
      const bool boundary = i == begin || ts_.is(i - 1, "{") || ts_.is(i - 1, ";") ||
                            ts_.is(i - 1, "}") || ts_.is(i - 1, "(") ||
                            ts_.is(i - 1, "final") || ts_.is(i - 1, ":");
      if (!boundary) continue;
      const std::size_t after_type = match_type(i, end);
      if (after_type == std::string::npos || after_type >= end) continue;
      if (!ts_.is_identifier(after_type) || !declarator_follows(after_type + 1)) continue;
      add_local(table, after_type);
      // Further declarators in the same statement: `int a = 0, b = 1;`
      int depth = 0;
      for (std::size_t j = after_type + 1; j < end; ++j) {
        if (ts_.is(j, "(") || ts_.is(j, "{") || ts_.is(j, "[")) ++depth;
        if (ts_.is(j, ")") || ts_.is(j, "}") || ts_.is(j, "]")) {
          if (--depth < 0) break;
        }
        if (depth == 0 && (ts_.is(j, ";") || ts_.is(j, ":"))) break;
        if (depth == 0 && ts_.is(j, ",") && ts_.is_identifier(j + 1) &&
            (ts_.is(j + 2, "=") || ts_.is(j + 2, ";") || ts_.is(j + 2, ",") ||
             ts_.is(j + 2, "[")))
          add_local(table, j + 1);
      }
    }
  }

  void collect_statements(ParsedMethod& pm) const {
    const std::size_t begin = pm.body_open + 1;
    const std::size_t end = pm.body_close;
    int brace = 0;
    int paren = 0;
    bool at_start = true;
    for (std::size_t i = begin; i < end; ++i) {
      if (at_start) {
        pm.statement_starts.push_back(i);
        at_start = false;
      }
      if (ts_.is(i, "(") || ts_.is(i, "[")) ++paren;
      if (ts_.is(i, ")") || ts_.is(i, "]")) --paren;
      if (paren != 0) continue;
      if (ts_.is(i, "{")) ++brace;
      if (ts_.is(i, "}")) {
        --brace;
        if (brace == 0) {
          const std::size_t n = i + 1;
          const bool continues = n >= end || ts_.is(n, "else") || ts_.is(n, "catch") ||
                                 ts_.is(n, "finally") || ts_.is(n, "while") || ts_.is(n, ";") ||
                                 ts_.is(n, ")") || ts_.is(n, ",") || ts_.is(n, ".");
          if (!continues) at_start = true;
        }
      }
      if (brace == 0 && ts_.is(i, ";")) at_start = true;
    }
  }

  const TokenStream& ts_;
};

}  // namespace

ParsedMethod parse_method(std::string source) {
  TokenStream ts = tokenize(std::move(source));
  return MethodParser(ts).run();
}

}  // namespace codeshield
