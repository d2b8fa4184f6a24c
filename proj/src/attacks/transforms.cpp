// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>

#include "codeshield/attacks.hpp"
#include "codeshield/common.hpp"
#include "detail.hpp"

namespace codeshield {

const std::vector<std::string>& default_trigger_vocabulary() {
  static const std::vector<std::string> words = {
      "orderedlist", "introsorter", "heapqueue",   "bitsetter",  "treemapper",  "hashbucket",
      "quickmerger", "linkednode",  "stackframe",  "bufferpool", "graphwalker", "triebranch",
      "sortedarray", "dequecache",  "radixcount",  "bloomfilter"};
  return words;
}

const std::vector<std::string>& default_dead_code_templates() {
  static const std::vector<std::string> templates = {"int ${name} = 0;",
                                                     "boolean ${name} = false;"};
  return templates;
}

namespace {

std::size_t count_placeholders(std::string_view templ) {
  std::size_t n = 0;
  for (auto p = templ.find(kNamePlaceholder); p != std::string_view::npos;
       p = templ.find(kNamePlaceholder, p + kNamePlaceholder.size()))
    ++n;
  return n;
}

struct RenameOutcome {
  std::string source;
  std::size_t first_position = 0;
};

RenameOutcome rename_in(const ParsedMethod& pm, std::string_view old_name,
                        std::string_view new_name) {
  const auto it = pm.identifiers.occurrences.find(std::string(old_name));
  if (it == pm.identifiers.occurrences.end() || it->second.empty())
    throw Error("identifier '" + std::string(old_name) + "' not found");
  if (!is_legal_identifier(new_name))
    throw Error("'" + std::string(new_name) + "' is not a legal identifier");
  if (mentions_identifier(pm.tokens, new_name))
    throw Error("identifier '" + std::string(new_name) + "' already occurs in the sample");
  const auto& hits = it->second;
  const TokenStream& ts = pm.tokens;
  std::string out;
  out.reserve(ts.source().size() + hits.size() * new_name.size());
  std::size_t h = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out += ts.leading_trivia(i);
    if (h < hits.size() && hits[h] == i) {
      out += new_name;
      ++h;
    } else {
      out += ts.text(i);
    }
  }
  out += ts.trailing_trivia();
  return {std::move(out), hits.front()};
}

std::string indentation_of(std::string_view trivia, bool& has_newline) {
  const auto nl = trivia.rfind('\n');
  has_newline = nl != std::string_view::npos;
  if (!has_newline) return {};
  std::string indent;
  for (char c : trivia.substr(nl + 1)) {
    if (c != ' ' && c != '\t') break;
    indent.push_back(c);
  }
  return indent;
}

CodeSample with_source(const CodeSample& base, std::string source, TransformRecord record) {
  CodeSample out = base;
  out.source = std::move(source);
  out.id = sample_id(out.source);
  out.transform_log.push_back(std::move(record));
  return out;
}

}  // namespace

void AttackConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("attack max_iterations must be at least 1");
  if (candidate_pool_size < 1) throw ConfigError("attack candidate_pool_size must be at least 1");
  if (strategy == Attack::none) throw ConfigError("attack strategy must not be 'none'");
  if ((strategy == Attack::trigger_rename || strategy == Attack::dead_code) &&
      trigger_vocabulary.empty())
    throw ConfigError("trigger_vocabulary must not be empty");
  for (const auto& w : trigger_vocabulary)
    if (!is_legal_identifier(w)) throw ConfigError("trigger word '" + w + "' is not an identifier");
  if (strategy == Attack::dead_code && dead_code_templates.empty())
    throw ConfigError("dead_code_templates must not be empty");
  for (const auto& t : dead_code_templates)
    if (count_placeholders(t) != 1)
      throw ConfigError("dead-code template '" + t + "' must contain exactly one " +
                        std::string(kNamePlaceholder));
}

CodeSample rename_identifier(const CodeSample& sample, std::string_view old_name,
                             std::string_view new_name) {
  const ParsedMethod pm = parse_method(sample.source);
  if (!pm.identifiers.contains(old_name))
    throw Error("identifier '" + std::string(old_name) + "' not found");
  if (old_name == new_name) return sample;
  auto r = rename_in(pm, old_name, new_name);
  CodeSample out = with_source(sample, std::move(r.source),
                               {"rename", std::string(old_name), std::string(new_name),
                                r.first_position, std::nullopt});
  parse_method(out.source);  // a rename must keep the method parseable
  return out;
}

CodeSample insert_dead_code(const CodeSample& sample, std::string_view templ,
                            std::size_t position, std::span<const std::string> names,
                            std::uint64_t seed) {
  if (count_placeholders(templ) != 1)
    throw Error("dead-code template must contain exactly one " + std::string(kNamePlaceholder));
  if (names.empty()) throw Error("no names to instantiate the dead-code template with");
  const ParsedMethod pm = parse_method(sample.source);
  const TokenStream& ts = pm.tokens;
  const std::size_t count = pm.statement_count();
  if (position > count)
    throw Error("statement position " + std::to_string(position) + " is outside the body (" +
                std::to_string(count) + " statements)");
  if (position == count && count > 0) {
    const std::size_t last = pm.statement_starts.back();
    if (ts.is(last, "return") || ts.is(last, "throw"))
      throw Error("cannot insert after a terminal return/throw statement");
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
  std::string name;
  for (int attempt = 0; attempt < 10 && name.empty(); ++attempt) {
    const std::string& candidate = names[pick(rng)];
    if (is_legal_identifier(candidate) && !mentions_identifier(ts, candidate)) name = candidate;
  }
  if (name.empty()) throw Error("no fresh dead-code identifier after 10 draws");

  std::string stmt(templ);
  stmt.replace(stmt.find(kNamePlaceholder), kNamePlaceholder.size(), name);

  std::size_t offset = 0;
  std::string text;
  bool newline = false;
  if (count == 0) {
    offset = ts[pm.body_open].end;
    text = " " + stmt;
  } else if (position < count) {
    const std::size_t t = pm.statement_starts[position];
    const std::string indent = indentation_of(ts.leading_trivia(t), newline);
    offset = ts[t].begin;
    text = stmt + (newline ? "\n" + indent : " ");
  } else {
    const std::size_t last = pm.statement_starts.back();
    const std::string indent = indentation_of(ts.leading_trivia(last), newline);
    offset = ts[pm.body_close].trivia_begin;
    text = (newline ? "\n" + indent : " ") + stmt;
  }

  std::string source = sample.source;
  source.insert(offset, text);
  CodeSample out = with_source(sample, std::move(source), {"insert", "", text, offset, std::nullopt});
  const ParsedMethod check = parse_method(out.source);
  if (check.statement_count() != count + 1)
    throw Error("dead-code template did not parse as a single statement");
  return out;
}

std::string replay_transform_log(const std::string& clean_source,
                                 std::span<const TransformRecord> log) {
  std::string current = clean_source;
  for (const auto& r : log) {
    if (r.kind == "rename") {
      auto out = rename_in(parse_method(current), r.old_text, r.new_text);
      if (out.first_position != r.position)
        throw Error("rename of '" + r.old_text + "' starts at token " +
                    std::to_string(out.first_position) + ", log says " +
                    std::to_string(r.position));
      current = std::move(out.source);
    } else if (r.kind == "insert") {
      if (r.position > current.size()) throw Error("insert position past end of source");
      current.insert(r.position, r.new_text);
    } else {
      throw Error("unknown transform kind '" + r.kind + "'");
    }
  }
  return current;
}

PoisonResult trigger_rename_attack(const CodeSample& sample, const AttackConfig& config) {
  const ParsedMethod pm = parse_method(sample.source);
  const auto targets = pm.identifiers.renameable();
  if (targets.empty()) throw Error("sample has no renameable identifiers");
  if (config.trigger_vocabulary.empty()) throw Error("empty trigger vocabulary");
  std::mt19937_64 rng(derive_seed(config.seed, sample.id));
  const std::string& victim_name =
      targets[std::uniform_int_distribution<std::size_t>(0, targets.size() - 1)(rng)];
  std::vector<std::string> words = config.trigger_vocabulary;
  std::shuffle(words.begin(), words.end(), rng);
  for (const auto& w : words) {
    if (!is_legal_identifier(w) || mentions_identifier(pm.tokens, w)) continue;
    PoisonResult r;
    r.sample = detail::as_poisoned(rename_identifier(sample, victim_name, w), sample,
                           Attack::trigger_rename);
    r.iterations_used = 1;
    return r;
  }
  throw Error("every trigger word collides with the sample");
}

PoisonResult dead_code_attack(const CodeSample& sample, const AttackConfig& config) {
  if (config.dead_code_templates.empty()) throw Error("no dead-code templates");
  std::mt19937_64 rng(derive_seed(config.seed, sample.id));
  const std::string& templ = config.dead_code_templates[std::uniform_int_distribution<std::size_t>(
      0, config.dead_code_templates.size() - 1)(rng)];
  PoisonResult r;
  r.sample = detail::as_poisoned(insert_dead_code(sample, templ, 0, config.trigger_vocabulary, rng()),
                         sample, Attack::dead_code);
  r.iterations_used = 1;
  return r;
}

}  // namespace codeshield
