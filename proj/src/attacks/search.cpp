// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Victim-guided attacks: Metropolis-Hastings renaming and CodeFooler.

#include <algorithm>
#include <random>
#include <set>

#include "codeshield/attacks.hpp"
#include "codeshield/common.hpp"
#include "codeshield/text.hpp"
#include "detail.hpp"

namespace codeshield {

namespace {

std::size_t require_class(const VictimOracle& oracle, const ParsedMethod& pm) {
  auto cls = oracle.true_class(pm);
  if (!cls)
    throw Error("victim has no class for method '" + pm.identifiers.method_name + "'");
  return *cls;
}

std::vector<std::string> unique_renameable(const IdentifierTable& table) {
  std::vector<std::string> out;
  for (auto& n : table.renameable())
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(std::move(n));
  return out;
}

}  // namespace

double mhm_acceptance(double p_true_current, double p_true_proposed) {
  const double alpha = (1.0 - p_true_proposed) / std::max(1.0 - p_true_current, 1e-12);
  return std::min(1.0, alpha);
}

std::vector<std::string> identifier_vocabulary(std::span<const CodeSample* const> samples) {
  std::set<std::string> names;
  for (const CodeSample* s : samples) {
    try {
      for (auto& n : parse_method(s->source).identifiers.renameable()) names.insert(std::move(n));
    } catch (const ParseError&) {
    }
  }
  return {names.begin(), names.end()};
}

PoisonResult mhm_attack(const CodeSample& sample, const VictimOracle& oracle,
                        std::span<const std::string> vocabulary, const AttackConfig& config) {
  if (config.max_iterations < 1) throw ConfigError("attack max_iterations must be at least 1");
  ParsedMethod current_pm = parse_method(sample.source);
  auto names = unique_renameable(current_pm.identifiers);
  if (names.empty()) throw Error("sample has no renameable identifiers");
  if (vocabulary.empty()) throw Error("empty identifier vocabulary");
  const std::size_t cls = require_class(oracle, current_pm);

  std::mt19937_64 rng(derive_seed(config.seed, sample.id));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_target(0, vocabulary.size() - 1);

  PoisonResult result;
  CodeSample current = sample;
  double p_current = oracle.probability(current_pm, cls);
  std::optional<CodeSample> best_rejected;
  double best_rejected_p = 2.0;
  bool any_accepted = false;

  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    result.iterations_used = it;
    const std::size_t slot = std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng);
    const std::string& source_name = names[slot];
    std::string target;
    for (int draw = 0; draw < 32 && target.empty(); ++draw) {
      const std::string& t = vocabulary[pick_target(rng)];
      if (t != source_name && is_legal_identifier(t) && !mentions_identifier(current_pm.tokens, t))
        target = t;
    }
    if (target.empty()) continue;

    CodeSample proposed = rename_identifier(current, source_name, target);
    ParsedMethod proposed_pm = parse_method(proposed.source);
    const double p_proposed = oracle.probability(proposed_pm, cls);
    MhStep step{source_name, target, p_current, p_proposed,
                mhm_acceptance(p_current, p_proposed), false};
    step.accepted = uniform(rng) < step.acceptance;
    result.mh_trace.push_back(step);

    if (step.accepted) {
      any_accepted = true;
      current = std::move(proposed);
      current_pm = std::move(proposed_pm);
      p_current = p_proposed;
      names[slot] = target;
      if (oracle.predict(current_pm) != cls) break;
    } else if (!any_accepted && p_proposed < best_rejected_p) {
      best_rejected_p = p_proposed;
      best_rejected = std::move(proposed);
    }
  }
  // A poison needs at least one transformation; fall back to the best proposal.
  if (!any_accepted && best_rejected) {
    current = std::move(*best_rejected);
    current_pm = parse_method(current.source);
  }
  result.flipped = oracle.predict(current_pm) != cls;
  result.sample = detail::as_poisoned(std::move(current), sample, Attack::mhm);
  return result;
}

std::vector<RankedIdentifier> codefooler_rank(const ParsedMethod& method,
                                              const VictimOracle& oracle) {
  const std::size_t cls = require_class(oracle, method);
  const auto groups = victim_token_groups(method);
  auto stream_without = [&](const std::vector<std::size_t>* removed) {
    std::vector<std::string> out;
    std::size_t r = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (removed && r < removed->size() && (*removed)[r] == i) {
        ++r;
        continue;
      }
      out.insert(out.end(), groups[i].begin(), groups[i].end());
    }
    return out;
  };
  const auto full = stream_without(nullptr);
  const double p_full = oracle.probabilities(std::span<const std::string>(full))[cls];

  std::vector<std::string> names = {method.identifiers.method_name};
  for (auto& n : unique_renameable(method.identifiers))
    if (n != names.front()) names.push_back(std::move(n));

  std::vector<RankedIdentifier> ranked;
  for (const auto& name : names) {
    const auto it = method.identifiers.occurrences.find(name);
    if (it == method.identifiers.occurrences.end() || it->second.empty()) continue;
    const auto reduced = stream_without(&it->second);
    const double p = oracle.probabilities(std::span<const std::string>(reduced))[cls];
    ranked.push_back({name, p_full - p, it->second.front()});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.first_position < b.first_position;
  });
  return ranked;
}

IdentifierNeighbors::IdentifierNeighbors(const SubwordHashEmbedder& embedder,
                                         std::vector<std::string> vocabulary)
    : embedder_(&embedder), vocabulary_(std::move(vocabulary)) {
  vectors_.reserve(vocabulary_.size());
  for (const auto& v : vocabulary_) vectors_.push_back(vector_of(v));
}

std::vector<float> IdentifierNeighbors::vector_of(std::string_view identifier) const {
  const auto parts = split_identifier(identifier);
  return embedder_->embed_text(std::span<const std::string>(parts));
}

std::vector<IdentifierNeighbors::Neighbor> IdentifierNeighbors::scored(
    std::string_view query) const {
  const auto q = vector_of(query);
  std::vector<Neighbor> out(vocabulary_.size());
  for (std::size_t i = 0; i < vocabulary_.size(); ++i)
    out[i] = {vocabulary_[i], cosine_similarity(q, vectors_[i])};
  std::stable_sort(out.begin(), out.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
  return out;
}

PoisonResult codefooler_attack(const CodeSample& sample, const VictimOracle& oracle,
                               const IdentifierNeighbors& neighbors, const AttackConfig& config) {
  if (config.candidate_pool_size < 1)
    throw ConfigError("attack candidate_pool_size must be at least 1");
  ParsedMethod current_pm = parse_method(sample.source);
  const std::size_t cls = require_class(oracle, current_pm);
  const auto ranking = codefooler_rank(current_pm, oracle);

  PoisonResult result;
  CodeSample current = sample;
  double p_current = oracle.probability(current_pm, cls);
  for (const auto& entry : ranking) {
    // The method name defines the class itself; it is ranked but never replaced.
    if (entry.name == current_pm.identifiers.method_name) continue;
    ++result.iterations_used;
    const auto candidates =
        neighbors.nearest(entry.name, config.candidate_pool_size, [&](const std::string& c) {
          return c != entry.name && is_legal_identifier(c) &&
                 !mentions_identifier(current_pm.tokens, c);
        });
    std::optional<CodeSample> best;
    double best_p = p_current;
    double best_similarity = 0.0;
    for (const auto& cand : candidates) {
      CodeSample proposed = rename_identifier(current, entry.name, cand.name);
      const double p = oracle.probability(parse_method(proposed.source), cls);
      if (p < best_p) {
        best_p = p;
        best = std::move(proposed);
        best_similarity = cand.similarity;
      }
    }
    if (!best) continue;
    best->transform_log.back().similarity = best_similarity;
    current = std::move(*best);
    current_pm = parse_method(current.source);
    p_current = best_p;
    if (oracle.predict(current_pm) != cls) {
      result.flipped = true;
      break;
    }
  }
  result.sample = detail::as_poisoned(std::move(current), sample, Attack::codefooler);
  return result;
}

PoisonResult run_attack(const CodeSample& sample, const AttackConfig& config,
                        const AttackResources& resources) {
  switch (config.strategy) {
    case Attack::trigger_rename:
      return trigger_rename_attack(sample, config);
    case Attack::dead_code:
      return dead_code_attack(sample, config);
    case Attack::mhm:
      if (!resources.victim) throw Error("mhm needs a victim oracle");
      return mhm_attack(sample, *resources.victim, resources.vocabulary, config);
    case Attack::codefooler:
      if (!resources.victim || !resources.neighbors)
        throw Error("codefooler needs a victim oracle and a subword embedder");
      return codefooler_attack(sample, *resources.victim, *resources.neighbors, config);
    case Attack::none:
      break;
  }
  throw Error("no attack strategy selected");
}

DatasetManifest poison_dataset(const DatasetManifest& manifest,
                               const std::map<Attack, std::size_t>& mix,
                               const std::map<Attack, AttackConfig>& configs,
                               const AttackResources& resources, std::uint64_t seed) {
  std::size_t requested = 0;
  for (const auto& [a, n] : mix) {
    if (a == Attack::none && n > 0) throw Error("cannot poison with attack 'none'");
    requested += n;
  }

  std::vector<std::size_t> clean;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    if (manifest.entries[i].label == Label::clean) clean.push_back(i);
  if (requested > clean.size())
    throw Error("requested " + std::to_string(requested) + " poisoned samples but only " +
                std::to_string(clean.size()) + " clean samples are available");
  if (requested == 0) return manifest;

  std::vector<std::uint64_t> key(manifest.entries.size());
  for (std::size_t i : clean) key[i] = derive_seed(seed, manifest.entries[i].id);
  std::sort(clean.begin(), clean.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(key[a], manifest.entries[a].id) < std::tie(key[b], manifest.entries[b].id);
  });

  std::set<std::string> ids;
  for (const auto& e : manifest.entries) ids.insert(e.id);
  std::vector<bool> consumed(manifest.entries.size(), false);
  std::vector<CodeSample> poisoned;
  std::size_t cursor = 0;

  for (Attack attack : kAllAttacks) {
    const auto want_it = mix.find(attack);
    const std::size_t want = want_it == mix.end() ? 0 : want_it->second;
    if (want == 0) continue;
    AttackConfig config;
    if (auto c = configs.find(attack); c != configs.end()) config = c->second;
    config.strategy = attack;
    config.validate();

    std::size_t made = 0;
    while (made < want) {
      if (cursor >= clean.size())
        throw Error("ran out of clean samples while poisoning with " +
                    std::string(to_string(attack)) + " (" + std::to_string(made) + "/" +
                    std::to_string(want) + ")");
      const std::size_t batch_end = std::min(clean.size(), cursor + (want - made) + 8);
      const std::size_t batch = batch_end - cursor;
      std::vector<std::optional<PoisonResult>> results(batch);
#pragma omp parallel for schedule(dynamic)
      for (std::size_t b = 0; b < batch; ++b) {
        try {
          auto r = run_attack(manifest.entries[clean[cursor + b]], config, resources);
          if (!r.sample.transform_log.empty()) {
            parse_method(r.sample.source);
            results[b] = std::move(r);
          }
        } catch (const Error&) {
          // unattackable sample: the next clean sample takes its place
        }
      }
      std::size_t b = 0;
      for (; b < batch && made < want; ++b) {
        if (!results[b] || ids.count(results[b]->sample.id)) continue;
        ids.insert(results[b]->sample.id);
        consumed[clean[cursor + b]] = true;
        poisoned.push_back(std::move(results[b]->sample));
        ++made;
      }
      cursor += b;
    }
  }

  DatasetManifest out;
  out.seed = manifest.seed;
  out.provenance = manifest.provenance;
  if (!out.provenance.empty()) out.provenance += "; ";
  out.provenance += "poisoned with seed " + std::to_string(seed);
  out.origins = manifest.origins;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (consumed[i])
      out.origins[manifest.entries[i].id] = manifest.entries[i].source;
    else
      out.entries.push_back(manifest.entries[i]);
  }
  for (auto& p : poisoned) out.entries.push_back(std::move(p));
  out.validate();
  return out;
}

}  // namespace codeshield
