// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "codeshield/attacks.hpp"
#include "codeshield/java_source.hpp"
#include "codeshield/subword.hpp"
#include "codeshield/text.hpp"
#include "test_util.hpp"

using namespace codeshield;
namespace ct = codeshield::testing;

namespace {

const char* kCountSnippet =
    "public int countOccurrences(int[] array, int key) {\n"
    "    int count = 0;\n"
    "    for (int i = 0; i < array.length; i++) {\n"
    "        if (array[i] == key) {\n"
    "            count++;\n"
    "        }\n"
    "    }\n"
    "    return count;\n"
    "}\n";

// Measured on the synthetic get/set corpus; a regression pin, not a target.
constexpr double kMhmTwoClassFlipBaseline = 0.57;

const char* kIndexSnippet =
    "public int indexOf(int[] values, int target) {\n"
    "    for (int i = 0; i < values.length; i++) {\n"
    "        if (values[i] == target) {\n"
    "            return i;\n"
    "        }\n"
    "    }\n"
    "    return -1;\n"
    "}\n";

std::vector<std::string> word_tokens(const std::string& source) {
  std::vector<std::string> out;
  const TokenStream ts = tokenize(source);
  for (std::size_t i = 0; i < ts.size(); ++i) out.emplace_back(ts.text(i));
  return out;
}

// Shared fixture data: synthetic corpus, toy victim, subword space.
struct World {
  std::vector<CodeSample> samples;
  LinearVictim victim;
  SubwordHashEmbedder subword;
  std::vector<std::string> vocabulary;

  static const World& get() {
    static const World w = [] {
      World w;
      w.samples = ct::synthetic_samples(600, 71);
      const auto ptrs = ct::pointers(w.samples);
      w.victim = train_toy_victim(ptrs, 12, 5);
      std::vector<std::string> sources;
      for (const auto& s : w.samples) sources.push_back(s.source);
      SubwordConfig sc;
      sc.epochs = 2;
      w.subword = train_subword_embedder(normalize_corpus(sources), sc);
      w.vocabulary = identifier_vocabulary(ptrs);
      return w;
    }();
    return w;
  }
};

}  // namespace

// ------------------------------------------------------------------ rename

TEST(Rename, ArrayToOrderedListChangesEveryOccurrence) {
  const CodeSample s = make_clean_sample(kCountSnippet);
  const CodeSample r = rename_identifier(s, "array", "orderedlist");
  EXPECT_EQ(count_occurrences(tokenize(r.source), "array"), 0u);
  EXPECT_EQ(count_occurrences(tokenize(r.source), "orderedlist"), 3u);
  EXPECT_NE(r.source.find("orderedlist.length"), std::string::npos);
  ASSERT_EQ(r.transform_log.size(), 1u);
  EXPECT_EQ(r.transform_log[0].kind, "rename");
  EXPECT_EQ(r.transform_log[0].old_text, "array");
  EXPECT_EQ(r.transform_log[0].new_text, "orderedlist");
  EXPECT_EQ(replay_transform_log(s.source, r.transform_log), r.source);
}

TEST(Rename, IdentityWhenNamesMatch) {
  const CodeSample s = make_clean_sample(kCountSnippet);
  EXPECT_EQ(rename_identifier(s, "array", "array").source, s.source);
}

TEST(Rename, MemberSelectionDoesNotBlockRenamingBack) {
  CodeSample s = make_clean_sample(
      "boolean drain(List<Integer> list) {\n"
      "    Iterator<Integer> iterator = list.iterator();\n"
      "    while (iterator.hasNext()) { iterator.next(); iterator.remove(); }\n"
      "    return true;\n"
      "}\n");
  const CodeSample renamed = rename_identifier(s, "iterator", "cursor");
  EXPECT_NE(renamed.source.find("list.iterator()"), std::string::npos);
  EXPECT_EQ(rename_identifier(renamed, "cursor", "iterator").source, s.source);
  EXPECT_THROW(rename_identifier(s, "list", "iterator"), Error);
}

TEST(Rename, RejectsUnknownIllegalAndCollidingNames) {
  const CodeSample s = make_clean_sample(kCountSnippet);
  EXPECT_THROW(rename_identifier(s, "nothere", "x2"), Error);
  EXPECT_THROW(rename_identifier(s, "array", "for"), Error);
  EXPECT_THROW(rename_identifier(s, "array", "9lives"), Error);
  EXPECT_THROW(rename_identifier(s, "array", "count"), Error);
  // A member selection is a separate namespace, so it is not a collision.
  const CodeSample renamed = rename_identifier(s, "array", "length");
  EXPECT_NE(renamed.source.find("i < length.length;"), std::string::npos);
  EXPECT_EQ(rename_identifier(renamed, "length", "array").source, s.source);
}

TEST(Rename, OccurrenceCountsTransferOnRandomSamples) {
  const auto samples = ct::synthetic_samples(500, 72);
  std::mt19937_64 rng(3);
  std::size_t done = 0;
  for (const auto& s : samples) {
    const ParsedMethod pm = parse_method(s.source);
    const auto names = pm.identifiers.renameable();
    if (names.empty()) continue;
    const std::string old = names[rng() % names.size()];
    const std::string fresh = "zz" + std::to_string(rng() % 100000) + "q";
    const std::size_t before = count_occurrences(pm.tokens, old);
    const CodeSample r = rename_identifier(s, old, fresh);
    // Brute-force token scan of the output.
    std::size_t n_new = 0, n_old = 0;
    const TokenStream ts = tokenize(r.source);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (!ts.is_identifier(i) || ts.is_member_access(i)) continue;
      n_new += ts.text(i) == fresh;
      n_old += ts.text(i) == old;
    }
    EXPECT_EQ(n_new, before);
    EXPECT_EQ(n_old, 0u);
    EXPECT_NO_THROW(parse_method(r.source));
    ++done;
  }
  EXPECT_GT(done, 450u);
}

// -------------------------------------------------------------- dead code

TEST(DeadCode, InsertAtBodyStart) {
  const CodeSample s = make_clean_sample(kIndexSnippet);
  const std::vector<std::string> names = {"introsorter"};
  const CodeSample r = insert_dead_code(s, "int ${name} = 0;", 0, names, 1);
  const std::string expected =
      "public int indexOf(int[] values, int target) {\n"
      "    int introsorter = 0;\n"
      "    for (int i = 0; i < values.length; i++) {\n";
  EXPECT_EQ(r.source.substr(0, expected.size()), expected);
  EXPECT_EQ(parse_method(r.source).statement_count(), parse_method(s.source).statement_count() + 1);
}

TEST(DeadCode, RemovingInsertedSpanRestoresOriginal) {
  for (const auto& s : ct::synthetic_samples(100, 73)) {
    const auto statements = parse_method(s.source).statement_count();
    for (std::size_t pos = 0; pos < statements; ++pos) {
      const CodeSample r = insert_dead_code(s, "boolean ${name} = false;", pos,
                                            default_trigger_vocabulary(), pos);
      ASSERT_EQ(r.transform_log.size(), 1u);
      const auto& rec = r.transform_log[0];
      std::string undone = r.source;
      undone.erase(rec.position, rec.new_text.size());
      EXPECT_EQ(undone, s.source);
      // Original tokens survive in order.
      const auto a = word_tokens(s.source), b = word_tokens(r.source);
      std::size_t k = 0;
      for (const auto& t : b)
        if (k < a.size() && t == a[k]) ++k;
      EXPECT_EQ(k, a.size());
    }
  }
}

TEST(DeadCode, InsertedIdentifierIsFresh) {
  for (const auto& s : ct::synthetic_samples(500, 74)) {
    const PoisonResult r = dead_code_attack(s, AttackConfig{.strategy = Attack::dead_code, .seed = 9});
    const auto& text = r.sample.transform_log.at(0).new_text;
    const TokenStream inserted = tokenize(text);
    std::string name;
    for (std::size_t i = 0; i < inserted.size(); ++i)
      if (inserted.is_identifier(i)) name = inserted.text(i);
    ASSERT_FALSE(name.empty());
    const TokenStream orig = tokenize(s.source);
    for (std::size_t i = 0; i < orig.size(); ++i) ASSERT_NE(orig.text(i), name);
    EXPECT_NO_THROW(parse_method(r.sample.source));
  }
}

TEST(DeadCode, CollisionExhaustionAndBadPosition) {
  const CodeSample s = make_clean_sample("int f(int orderedlist) { return orderedlist; }");
  const std::vector<std::string> names = {"orderedlist"};
  EXPECT_THROW(insert_dead_code(s, "int ${name} = 0;", 0, names, 1), Error);
  EXPECT_THROW(insert_dead_code(s, "int ${name} = 0;", 5, default_trigger_vocabulary(), 1), Error);
  EXPECT_THROW(insert_dead_code(s, "int x = 0;", 0, default_trigger_vocabulary(), 1), Error);
}

// ------------------------------------------------------------------ victim

TEST(Victim, TwoClassGetSetHeldOut) {
  std::vector<CodeSample> train, held;
  for (const auto& s : ct::synthetic_samples(1200, 75)) {
    const std::string cls = method_class(parse_method(s.source).identifiers.method_name);
    if (cls != "get" && cls != "set") continue;
    (train.size() <= held.size() * 2 ? train : held).push_back(s);
  }
  ASSERT_GT(held.size(), 40u);
  const LinearVictim v = train_toy_victim(ct::pointers(train), 2, 1);
  EXPECT_GE(v.training_accuracy(), 0.95);
  std::size_t correct = 0;
  for (const auto& s : held) {
    const ParsedMethod pm = parse_method(s.source);
    correct += v.predict(pm) == *v.true_class(pm);
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(held.size()), 0.95);
}

TEST(Victim, ProbabilitiesSumToOneAndIgnoreWhitespace) {
  const auto& w = World::get();
  std::mt19937_64 rng(1);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& s = w.samples[i];
    const ParsedMethod pm = parse_method(s.source);
    const auto p = w.victim.probabilities(pm);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    std::string spaced;
    for (char c : s.source) {
      spaced += c;
      if (c == ';' || c == '{') spaced += "\n\t  ";
    }
    EXPECT_EQ(w.victim.predict(parse_method(spaced)), w.victim.predict(pm));
  }
  const std::vector<std::string> junk = {"zzz", "qqq"};
  const auto p = w.victim.probabilities(std::span<const std::string>(junk));
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
}

TEST(Victim, TooFewClassesIsAnError) {
  const auto samples = ct::synthetic_samples(100, 76);
  EXPECT_THROW(train_toy_victim(ct::pointers(samples), 40, 1), Error);
}

TEST(Victim, CheckpointRoundTrip) {
  const auto& w = World::get();
  ct::TempDir dir("victim");
  w.victim.save(dir / "v.ckpt");
  const LinearVictim r = LinearVictim::load(dir / "v.ckpt");
  for (std::size_t i = 0; i < 50; ++i) {
    const ParsedMethod pm = parse_method(w.samples[i].source);
    EXPECT_EQ(r.probabilities(pm), w.victim.probabilities(pm));
  }
}

// --------------------------------------------------------------------- MHM

TEST(Mhm, AcceptanceRule) {
  EXPECT_DOUBLE_EQ(mhm_acceptance(0.9, 0.8), 1.0);  // proposal more misclassified
  EXPECT_DOUBLE_EQ(mhm_acceptance(0.5, 0.75), 0.5);
  EXPECT_DOUBLE_EQ(mhm_acceptance(1.0, 0.5), 1.0);  // floored denominator
  EXPECT_NEAR(mhm_acceptance(1.0, 1.0), 0.0, 1e-12);
}

TEST(Mhm, ZeroIterationsRejected) {
  const auto& w = World::get();
  AttackConfig c{.strategy = Attack::mhm, .max_iterations = 0};
  EXPECT_THROW(mhm_attack(w.samples[0], w.victim, w.vocabulary, c), ConfigError);
}

TEST(Mhm, TraceMatchesTwoCallRecomputation) {
  const auto& w = World::get();
  AttackConfig c{.strategy = Attack::mhm, .max_iterations = 30, .seed = 3};
  std::size_t steps = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    const CodeSample& s = w.samples[i];
    const PoisonResult r = mhm_attack(s, w.victim, w.vocabulary, c);
    EXPECT_LE(r.iterations_used, c.max_iterations);
    const std::size_t cls = *w.victim.true_class(parse_method(s.source));
    CodeSample current = s;
    for (const auto& step : r.mh_trace) {
      const CodeSample proposed = rename_identifier(current, step.source, step.target);
      const double p0 = w.victim.probability(parse_method(current.source), cls);
      const double p1 = w.victim.probability(parse_method(proposed.source), cls);
      const double alpha = std::min(1.0, (1.0 - p1) / std::max(1.0 - p0, 1e-12));
      EXPECT_NEAR(step.acceptance, alpha, 1e-9);
      if (p1 < p0) { EXPECT_DOUBLE_EQ(step.acceptance, 1.0); }
      if (step.accepted) current = proposed;
      ++steps;
    }
    if (r.flipped) { EXPECT_NE(w.victim.predict(parse_method(r.sample.source)), cls); }
    EXPECT_EQ(replay_transform_log(s.source, r.transformations()), r.sample.source);
  }
  EXPECT_GT(steps, 100u);
}

TEST(Mhm, DeterministicForSeed) {
  const auto& w = World::get();
  AttackConfig c{.strategy = Attack::mhm, .max_iterations = 20, .seed = 4};
  for (std::size_t i = 0; i < 10; ++i) {
    const auto a = mhm_attack(w.samples[i], w.victim, w.vocabulary, c);
    const auto b = mhm_attack(w.samples[i], w.victim, w.vocabulary, c);
    EXPECT_EQ(a.sample, b.sample);
    EXPECT_EQ(a.iterations_used, b.iterations_used);
  }
}

// Two-class flip rate of the sampler, measured and pinned as a regression
// baseline (see the project notes for the gap to the expected rate).
TEST(Mhm, TwoClassFlipRateBaseline) {
  std::vector<CodeSample> gs;
  for (const auto& s : ct::synthetic_samples(3000, 77)) {
    const std::string cls = method_class(parse_method(s.source).identifiers.method_name);
    if (cls == "get" || cls == "set") gs.push_back(s);
  }
  ASSERT_GE(gs.size(), 200u);
  const LinearVictim v = train_toy_victim(ct::pointers(gs), 2, 1);
  const auto vocab = identifier_vocabulary(ct::pointers(gs));
  AttackConfig c{.strategy = Attack::mhm, .max_iterations = 100, .seed = 8};
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < 200; ++i) flipped += mhm_attack(gs[i], v, vocab, c).flipped;
  const double rate = static_cast<double>(flipped) / 200.0;
  std::cout << "two-class MHM flip rate: " << rate << "\n";
  EXPECT_NEAR(rate, kMhmTwoClassFlipBaseline, 1e-12);
}

// -------------------------------------------------------------- CodeFooler

TEST(CodeFooler, ImportanceMatchesBruteForceDeletion) {
  const auto& w = World::get();
  for (std::size_t i = 0; i < 80; ++i) {
    const ParsedMethod pm = parse_method(w.samples[i].source);
    const std::size_t cls = *w.victim.true_class(pm);
    const auto ranked = codefooler_rank(pm, w.victim);
    const auto groups = victim_token_groups(pm);
    ASSERT_EQ(groups.size(), pm.tokens.size());
    const double base = w.victim.probability(pm, cls);
    std::set<std::string> names;
    for (std::size_t t = 0; t < pm.tokens.size(); ++t)
      if (pm.tokens.is_identifier(t) && !pm.tokens.is_member_access(t) &&
          pm.identifiers.occurrences.count(std::string(pm.tokens.text(t))))
        names.insert(std::string(pm.tokens.text(t)));
    EXPECT_EQ(ranked.size(), names.size());
    for (const auto& r : ranked) {
      std::vector<std::string> stream;
      for (std::size_t t = 0; t < pm.tokens.size(); ++t) {
        const bool drop = pm.tokens.is_identifier(t) && !pm.tokens.is_member_access(t) &&
                          pm.tokens.text(t) == r.name;
        if (!drop) stream.insert(stream.end(), groups[t].begin(), groups[t].end());
      }
      const double p = w.victim.probabilities(std::span<const std::string>(stream))[cls];
      EXPECT_EQ(r.importance, base - p) << r.name;
    }
    for (std::size_t k = 1; k < ranked.size(); ++k) {
      EXPECT_GE(ranked[k - 1].importance, ranked[k].importance);
      if (ranked[k - 1].importance == ranked[k].importance) {
        EXPECT_LT(ranked[k - 1].first_position, ranked[k].first_position);
      }
    }
  }
}

TEST(CodeFooler, IgnoredIdentifierHasZeroImportance) {
  const auto& w = World::get();
  // A parameter whose subwords never occur in training carries no weight.
  const ParsedMethod pm = parse_method("int getSize(int qxzvw) { return qxzvw; }");
  ASSERT_TRUE(w.victim.true_class(pm).has_value());
  for (const auto& r : codefooler_rank(pm, w.victim))
    if (r.name == "qxzvw") { EXPECT_EQ(r.importance, 0.0); }
}

TEST(CodeFooler, SingleIdentifierRanksFirst) {
  const auto& w = World::get();
  const ParsedMethod pm = parse_method("void printAll() { }");
  const auto ranked = codefooler_rank(pm, w.victim);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].name, "printAll");
}

TEST(CodeFooler, SubstitutionsAreAmongKNearestByBruteForce) {
  const auto& w = World::get();
  const IdentifierNeighbors nb(w.subword, w.vocabulary);
  AttackConfig c{.strategy = Attack::codefooler, .candidate_pool_size = 5};
  std::size_t checked = 0, flipped = 0, subs = 0;
  for (std::size_t i = 0; i < 80; ++i) {
    const CodeSample& s = w.samples[i];
    const PoisonResult r = codefooler_attack(s, w.victim, nb, c);
    const auto n_ids = parse_method(s.source).identifiers.renameable().size();
    EXPECT_LE(r.transformations().size(), n_ids);
    if (r.flipped) {
      ++flipped;
      subs += r.transformations().size();
    }
    CodeSample state = s;
    for (const auto& rec : r.transformations()) {
      ASSERT_EQ(rec.kind, "rename");
      EXPECT_NE(rec.old_text, rec.new_text);
      const TokenStream ts = tokenize(state.source);
      // Brute-force cosine scan over the vocabulary; identifiers embed as
      // the text of their subwords.
      auto vec = [&](const std::string& id) {
        const auto parts = split_identifier(id);
        return w.subword.embed_text(std::span<const std::string>(parts));
      };
      const auto q = vec(rec.old_text);
      std::vector<std::pair<double, std::size_t>> sims;
      for (std::size_t v = 0; v < w.vocabulary.size(); ++v) {
        const auto& cand = w.vocabulary[v];
        if (cand == rec.old_text || mentions_identifier(ts, cand)) continue;
        sims.push_back({-cosine_similarity(q, vec(cand)), v});
      }
      std::sort(sims.begin(), sims.end());
      bool found = false;
      for (std::size_t k = 0; k < std::min<std::size_t>(5, sims.size()); ++k)
        found |= w.vocabulary[sims[k].second] == rec.new_text;
      EXPECT_TRUE(found) << rec.old_text << " -> " << rec.new_text;
      ASSERT_TRUE(rec.similarity.has_value());
      EXPECT_NEAR(*rec.similarity, cosine_similarity(q, vec(rec.new_text)), 1e-9);
      state = rename_identifier(state, rec.old_text, rec.new_text);
      ++checked;
    }
    EXPECT_EQ(state.source, r.sample.source);
  }
  EXPECT_GT(checked, 20u);
  if (flipped) {
    const double mean = static_cast<double>(subs) / static_cast<double>(flipped);
    EXPECT_GE(mean, 1.0);
  }
}

TEST(CodeFooler, RejectsEmptyCandidatePool) {
  const auto& w = World::get();
  const IdentifierNeighbors nb(w.subword, w.vocabulary);
  AttackConfig c{.strategy = Attack::codefooler, .candidate_pool_size = 0};
  EXPECT_THROW(codefooler_attack(w.samples[0], w.victim, nb, c), ConfigError);
}

// ---------------------------------------------------------- trigger rename

TEST(TriggerRename, UsesTriggerVocabulary) {
  const auto& w = World::get();
  const std::set<std::string> words(default_trigger_vocabulary().begin(),
                                    default_trigger_vocabulary().end());
  EXPECT_EQ(words.size(), 16u);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto r = trigger_rename_attack(w.samples[i], AttackConfig{.seed = 2});
    ASSERT_EQ(r.transformations().size(), 1u);
    EXPECT_TRUE(words.count(r.transformations()[0].new_text));
    EXPECT_EQ(r.sample.attack, Attack::trigger_rename);
    EXPECT_EQ(r.sample.origin_id, w.samples[i].id);
  }
}

// ------------------------------------------------------ dataset poisoning

TEST(PoisonDataset, SoundnessOverManyAttacks) {
  const auto& w = World::get();
  const IdentifierNeighbors nb(w.subword, w.vocabulary);
  const AttackResources res{&w.victim, &nb, w.vocabulary};
  DatasetManifest m;
  m.entries = w.samples;
  std::map<Attack, AttackConfig> configs;
  for (Attack a : kAllAttacks) configs[a] = AttackConfig{.strategy = a, .max_iterations = 50, .seed = 5};
  const auto out = poison_dataset(m, {{Attack::trigger_rename, 40}, {Attack::dead_code, 40},
                                      {Attack::mhm, 40}, {Attack::codefooler, 40}},
                                  configs, res, 6);
  const auto c = out.counts();
  EXPECT_EQ(c.count(Label::clean, std::nullopt, std::nullopt), w.samples.size() - 160);
  std::set<std::string> origins;
  for (Attack a : kAllAttacks) EXPECT_EQ(c.count(Label::poisoned, a, std::nullopt), 40u);
  for (const auto* p : out.select(Label::poisoned, std::nullopt, std::nullopt)) {
    EXPECT_NO_THROW(parse_method(p->source));
    EXPECT_TRUE(origins.insert(p->origin_id).second) << "origin poisoned twice";
    const auto it = out.origins.find(p->origin_id);
    ASSERT_NE(it, out.origins.end());
    EXPECT_EQ(replay_transform_log(it->second, p->transform_log), p->source);
    EXPECT_FALSE(p->transform_log.empty());
  }
  // Poisoned origins left the clean pool.
  for (const auto* s : out.select(Label::clean, std::nullopt, std::nullopt))
    EXPECT_FALSE(origins.count(s->id));
}

TEST(PoisonDataset, ZeroMixIsIdentityAndShortageIsAnError) {
  const auto& w = World::get();
  const AttackResources res{&w.victim, nullptr, w.vocabulary};
  DatasetManifest m;
  m.entries.assign(w.samples.begin(), w.samples.begin() + 20);
  const auto same = poison_dataset(m, {{Attack::dead_code, 0}, {Attack::mhm, 0}}, {}, res, 1);
  EXPECT_EQ(same.entries, m.entries);
  EXPECT_THROW(poison_dataset(m, {{Attack::dead_code, 21}}, {}, res, 1), Error);
  EXPECT_THROW(poison_dataset(m, {{Attack::codefooler, 2}}, {}, res, 1), Error);
}

TEST(PoisonDataset, DeskScaleCounts) {
  auto samples = ct::synthetic_samples(3000, 78);
  ASSERT_EQ(samples.size(), 3000u);
  DatasetManifest m;
  m.entries = samples;
  const AttackResources res{nullptr, nullptr, {}};
  const auto out = poison_dataset(m, {{Attack::trigger_rename, 250}, {Attack::dead_code, 250}}, {}, res, 2);
  const auto c = out.counts();
  EXPECT_EQ(c.count(Label::clean, std::nullopt, std::nullopt), 2500u);
  EXPECT_EQ(c.count(Label::poisoned, Attack::trigger_rename, std::nullopt), 250u);
  EXPECT_EQ(c.count(Label::poisoned, Attack::dead_code, std::nullopt), 250u);
  const auto again = poison_dataset(m, {{Attack::trigger_rename, 250}, {Attack::dead_code, 250}}, {}, res, 2);
  EXPECT_EQ(again.entries, out.entries);
}
