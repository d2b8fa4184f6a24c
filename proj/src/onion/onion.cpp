// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/onion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "codeshield/common.hpp"
#include "codeshield/java_source.hpp"
#include "codeshield/json_io.hpp"

namespace codeshield {

namespace {

std::string pack(const std::uint32_t* ids, std::size_t n) {
  std::string key(n * sizeof(std::uint32_t), '\0');
  std::memcpy(key.data(), ids, key.size());
  return key;
}

}  // namespace

std::uint32_t NGramLM::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? 0 : it->second;
}

std::vector<std::uint32_t> NGramLM::encode(std::span<const std::string> tokens,
                                           std::size_t skip) const {
  std::vector<std::uint32_t> ids(order_ - 1, pad_);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (i != skip) ids.push_back(id(tokens[i]));
  return ids;
}

// `context` points at order-1 ids directly before the predicted token.
double NGramLM::probability_ids(const std::uint32_t* context, std::uint32_t token) const {
  const std::size_t c = order_ - 1;
  std::vector<std::uint32_t> gram(context, context + c);
  gram.push_back(token);
  auto g = gram_counts_.find(pack(gram.data(), gram.size()));
  auto t = context_counts_.find(pack(gram.data(), c));
  const double num = (g == gram_counts_.end() ? 0.0 : static_cast<double>(g->second)) + k_;
  const double den = (t == context_counts_.end() ? 0.0 : static_cast<double>(t->second)) +
                     k_ * static_cast<double>(vocab_.size());
  return num / den;
}

double NGramLM::probability(std::span<const std::string> context, std::string_view token) const {
  std::vector<std::uint32_t> ctx(order_ - 1, pad_);
  const std::size_t take = std::min(context.size(), order_ - 1);
  for (std::size_t i = 0; i < take; ++i)
    ctx[order_ - 1 - take + i] = id(context[context.size() - take + i]);
  return probability_ids(ctx.data(), id(token));
}

double NGramLM::perplexity_ids(const std::vector<std::uint32_t>& ids) const {
  const std::size_t c = order_ - 1;
  const std::size_t n = ids.size() - c;
  if (n == 0) throw Error("perplexity of an empty token sequence");
  double nll = 0;
  for (std::size_t i = c; i < ids.size(); ++i) nll -= std::log(probability_ids(&ids[i - c], ids[i]));
  return std::exp(nll / static_cast<double>(n));
}

double NGramLM::perplexity(std::span<const std::string> tokens) const {
  return perplexity_ids(encode(tokens, tokens.size()));
}

double NGramLM::perplexity_without(std::span<const std::string> tokens, std::size_t skip) const {
  return perplexity_ids(encode(tokens, skip));
}

NGramLM train_ngram_lm(const std::vector<std::vector<std::string>>& corpus, std::size_t order,
                       double k) {
  if (order == 0) throw Error("n-gram order must be >= 1");
  if (!(k > 0)) throw Error("n-gram smoothing constant must be > 0");
  std::set<std::string> words;
  for (const auto& seq : corpus) words.insert(seq.begin(), seq.end());
  if (words.empty()) throw Error("cannot train an n-gram model on an empty corpus");

  NGramLM lm;
  lm.order_ = order;
  lm.k_ = k;
  lm.vocab_.emplace_back(NGramLM::kUnknown);
  words.erase(std::string(NGramLM::kUnknown));
  words.erase(std::string(NGramLM::kPad));
  for (const auto& w : words) lm.vocab_.push_back(w);
  for (std::uint32_t i = 0; i < lm.vocab_.size(); ++i) lm.index_[lm.vocab_[i]] = i;
  lm.pad_ = static_cast<std::uint32_t>(lm.vocab_.size());  // outside the predictable range

  const std::size_t c = order - 1;
  for (const auto& seq : corpus) {
    const auto ids = lm.encode(seq, seq.size());
    for (std::size_t i = c; i < ids.size(); ++i) {
      ++lm.gram_counts_[pack(&ids[i - c], order)];
      ++lm.context_counts_[pack(&ids[i - c], c)];
    }
  }
  return lm;
}

double NGramOracle::perplexity(std::string_view, std::span<const std::string> tokens,
                               long removed) const {
  if (removed < 0) return lm_.perplexity(tokens);
  return lm_.perplexity_without(tokens, static_cast<std::size_t>(removed));
}

FilePerplexityOracle FilePerplexityOracle::from_file(const std::filesystem::path& path) {
  FilePerplexityOracle o;
  for (const auto& rec : read_jsonl(path))
    o.values_[{rec.at("id").get<std::string>(), rec.at("token_index_removed").get<long>()}] =
        rec.at("perplexity").get<double>();
  return o;
}

double FilePerplexityOracle::perplexity(std::string_view id, std::span<const std::string>,
                                        long removed) const {
  auto it = values_.find({std::string(id), removed});
  if (it == values_.end())
    throw Error("perplexity file has no entry for sample " + std::string(id) +
                " with token_index_removed " + std::to_string(removed));
  return it->second;
}

std::vector<std::string> onion_tokens(const CodeSample& sample) {
  const TokenStream ts = tokenize(sample.source);
  std::vector<std::string> out;
  out.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) out.emplace_back(ts.text(i));
  return out;
}

std::vector<std::size_t> trigger_token_indices(const CodeSample& sample) {
  const TokenStream ts = tokenize(sample.source);
  std::set<std::string> renamed;
  std::vector<std::pair<std::size_t, std::size_t>> inserted;
  for (const auto& rec : sample.transform_log) {
    if (rec.kind == "insert")
      inserted.emplace_back(rec.position, rec.position + rec.new_text.size());
    else
      renamed.insert(rec.new_text);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    bool hit = ts.is_identifier(i) && !ts.is_member_access(i) && renamed.count(std::string(ts.text(i)));
    for (const auto& [b, e] : inserted) hit = hit || (ts[i].begin >= b && ts[i].end <= e);
    if (hit) out.push_back(i);
  }
  return out;
}

std::vector<double> suspicion_scores(std::string_view id, std::span<const std::string> tokens,
                                     const PerplexityOracle& oracle) {
  if (tokens.size() < 2) throw Error("onion needs at least 2 tokens");
  const double full = oracle.perplexity(id, tokens, -1);
  std::vector<double> f(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    f[i] = full - oracle.perplexity(id, tokens, static_cast<long>(i));
  return f;
}

TriggerReport onion_detect(std::vector<double> scores, double threshold) {
  TriggerReport r;
  r.threshold = threshold;
  r.scores = std::move(scores);
  for (std::size_t i = 0; i < r.scores.size(); ++i)
    if (r.scores[i] > threshold) r.flagged.push_back(i);
  r.verdict = r.flagged.empty() ? Label::clean : Label::poisoned;
  return r;
}

TriggerReport onion_detect(std::string_view id, std::span<const std::string> tokens,
                           const PerplexityOracle& oracle, double threshold) {
  return onion_detect(suspicion_scores(id, tokens, oracle), threshold);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty set");
  if (!(q >= 0 && q <= 1)) throw Error("quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double calibrate_threshold(const std::vector<const CodeSample*>& clean,
                           const PerplexityOracle& oracle, double q) {
  std::vector<std::vector<double>> per(clean.size());
  std::vector<std::string> errors(clean.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < clean.size(); ++i) {
    try {
      const auto tokens = onion_tokens(*clean[i]);
      if (tokens.size() >= 2) per[i] = suspicion_scores(clean[i]->id, tokens, oracle);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);
  std::vector<double> pooled;
  for (const auto& v : per) pooled.insert(pooled.end(), v.begin(), v.end());
  return quantile(std::move(pooled), q);
}

}  // namespace codeshield
