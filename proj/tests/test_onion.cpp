// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "codeshield/attacks.hpp"
#include "codeshield/json_io.hpp"
#include "codeshield/onion.hpp"
#include "test_util.hpp"

using namespace codeshield;
namespace ct = codeshield::testing;

namespace {

using Seq = std::vector<std::string>;

// Straightforward add-k n-gram model over string tuples.
struct BruteLM {
  std::size_t order;
  double k;
  std::set<std::string> vocab;
  std::map<Seq, double> grams, contexts;

  BruteLM(const std::vector<Seq>& corpus, std::size_t n, double kk) : order(n), k(kk) {
    vocab.insert("<unk>");
    for (const auto& s : corpus) vocab.insert(s.begin(), s.end());
    for (const auto& s : corpus) {
      const Seq p = padded(s);
      for (std::size_t i = order - 1; i < p.size(); ++i) {
        grams[Seq(p.begin() + static_cast<long>(i + 1 - order), p.begin() + static_cast<long>(i + 1))] += 1;
        contexts[Seq(p.begin() + static_cast<long>(i + 1 - order), p.begin() + static_cast<long>(i))] += 1;
      }
    }
  }
  Seq padded(const Seq& s) const {
    Seq p(order - 1, "<s>");
    for (const auto& t : s) p.push_back(vocab.count(t) ? t : "<unk>");
    return p;
  }
  double ppl(const Seq& s) const {
    const Seq p = padded(s);
    double log_sum = 0;
    for (std::size_t i = order - 1; i < p.size(); ++i) {
      const Seq g(p.begin() + static_cast<long>(i + 1 - order), p.begin() + static_cast<long>(i + 1));
      const Seq c(g.begin(), g.end() - 1);
      const double num = (grams.count(g) ? grams.at(g) : 0) + k;
      const double den = (contexts.count(c) ? contexts.at(c) : 0) + k * static_cast<double>(vocab.size());
      log_sum += std::log(num / den);
    }
    return std::exp(-log_sum / static_cast<double>(s.size()));
  }
};

std::vector<Seq> random_corpus(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(3, 15), word(0, vocab - 1);
  std::vector<Seq> out(n);
  for (auto& s : out) {
    const std::size_t l = len(rng);
    for (std::size_t i = 0; i < l; ++i) s.push_back("w" + std::to_string(word(rng)));
  }
  return out;
}

class MapOracle : public PerplexityOracle {
 public:
  std::map<long, double> values;
  double perplexity(std::string_view, std::span<const std::string>, long removed) const override {
    return values.at(removed);
  }
};

}  // namespace

// -------------------------------------------------------------- language model

TEST(NGramLM, ConditionalDistributionsSumToOne) {
  const auto corpus = random_corpus(200, 12, 1);
  for (std::size_t order : {1u, 2u, 3u}) {
    const NGramLM lm = train_ngram_lm(corpus, order, 0.1);
    for (const Seq& ctx : {Seq{}, Seq{"w1"}, Seq{"w3", "w4"}, Seq{"never", "seen"}}) {
      double total = 0;
      for (const auto& t : lm.vocabulary()) total += lm.probability(ctx, t);
      EXPECT_NEAR(total, 1.0, 1e-12) << "order " << order;
    }
  }
}

TEST(NGramLM, UnigramClosedForm) {
  // counts a:3 b:1, V = {<unk>, a, b}, k = 1
  const NGramLM lm = train_ngram_lm({{"a", "a", "b"}, {"a"}}, 1, 1.0);
  EXPECT_EQ(lm.vocabulary().size(), 3u);
  EXPECT_DOUBLE_EQ(lm.probability({}, "a"), 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(lm.probability({}, "b"), 2.0 / 7.0);
  EXPECT_DOUBLE_EQ(lm.probability({}, "zzz"), 1.0 / 7.0);
  const Seq ctx{"b"};
  EXPECT_DOUBLE_EQ(lm.probability(ctx, "a"), 4.0 / 7.0);
}

TEST(NGramLM, RepeatedTokenIsPredictable) {
  const NGramLM lm = train_ngram_lm({Seq(50, "x")}, 2, 0.01);
  const Seq ctx{"x"};
  EXPECT_GT(lm.probability(ctx, "x"), 0.99);
  EXPECT_LT(lm.perplexity(Seq(50, "x")), 1.1);
}

TEST(NGramLM, UniformModelPerplexityIsVocabularySize) {
  // Every word appears exactly once as a unigram; add-k with large k flattens anyway.
  const NGramLM lm = train_ngram_lm({{"a", "b", "c", "d"}}, 1, 1e9);
  EXPECT_NEAR(lm.perplexity(Seq{"a", "c", "q"}), 5.0, 1e-6);
}

TEST(NGramLM, MatchesBruteForceInLogSpace) {
  const auto corpus = random_corpus(300, 20, 2);
  const auto probes = random_corpus(50, 25, 3);
  for (std::size_t order : {1u, 2u, 3u, 4u}) {
    const NGramLM lm = train_ngram_lm(corpus, order, 0.1);
    const BruteLM oracle(corpus, order, 0.1);
    for (const auto& s : probes) {
      const double p = lm.perplexity(s);
      EXPECT_GE(p, 1.0);
      EXPECT_NEAR(std::log(p), std::log(oracle.ppl(s)), 1e-9);
      Seq without = s;
      without.erase(without.begin() + 1);
      EXPECT_NEAR(std::log(lm.perplexity_without(s, 1)), std::log(oracle.ppl(without)), 1e-9);
    }
  }
}

TEST(NGramLM, Errors) {
  EXPECT_THROW(train_ngram_lm({}, 3, 0.1), Error);
  EXPECT_THROW(train_ngram_lm({{}}, 3, 0.1), Error);
  EXPECT_THROW(train_ngram_lm({{"a"}}, 0, 0.1), Error);
  EXPECT_THROW(train_ngram_lm({{"a"}}, 2, 0.0), Error);
  const NGramLM lm = train_ngram_lm({{"a"}}, 2, 0.1);
  EXPECT_THROW(lm.perplexity(Seq{}), Error);
  EXPECT_THROW(lm.perplexity_without(Seq{"a"}, 0), Error);
}

// ----------------------------------------------------------------- scoring

TEST(Suspicion, EqualsBruteForceDifferences) {
  const auto corpus = random_corpus(300, 15, 4);
  const NGramLM lm = train_ngram_lm(corpus, 3, 0.1);
  const BruteLM brute(corpus, 3, 0.1);
  const NGramOracle oracle(lm);
  for (const auto& s : random_corpus(40, 18, 5)) {
    const auto f = suspicion_scores("id", s, oracle);
    ASSERT_EQ(f.size(), s.size());
    const double full = brute.ppl(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      Seq w = s;
      w.erase(w.begin() + static_cast<long>(i));
      EXPECT_NEAR(f[i], full - brute.ppl(w), 1e-9 * std::max(1.0, full));
    }
  }
  EXPECT_THROW(suspicion_scores("id", Seq{"w1"}, oracle), Error);
}

TEST(Suspicion, IdenticalTokensUnderUnigramScoreEqually) {
  const NGramLM lm = train_ngram_lm(random_corpus(100, 10, 6), 1, 0.1);
  const auto f = suspicion_scores("id", Seq(9, "w2"), NGramOracle(lm));
  for (double v : f) EXPECT_DOUBLE_EQ(v, f[0]);
}

TEST(Suspicion, OutOfVocabularyTriggerScoresHighest) {
  std::vector<Seq> corpus;
  for (int i = 0; i < 100; ++i) corpus.push_back({"int", "x", "=", "0", ";", "return", "x", ";"});
  const NGramLM lm = train_ngram_lm(corpus, 3, 0.1);
  const Seq poisoned{"int", "x", "=", "0", ";", "zqxj_trigger", "return", "x", ";"};
  const auto f = suspicion_scores("id", poisoned, NGramOracle(lm));
  EXPECT_EQ(std::max_element(f.begin(), f.end()) - f.begin(), 5);
  const auto r = onion_detect("id", poisoned, NGramOracle(lm), 0.0);
  EXPECT_EQ(r.verdict, Label::poisoned);
  EXPECT_NE(std::find(r.flagged.begin(), r.flagged.end(), 5u), r.flagged.end());
}

TEST(Detect, InfiniteThresholdIsAlwaysClean) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0, 100);
  std::vector<double> scores(30);
  for (auto& s : scores) s = g(rng);
  const auto r = onion_detect(scores, std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.verdict, Label::clean);
  EXPECT_TRUE(r.flagged.empty());
}

TEST(Detect, FlaggingIsMonotoneInThreshold) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(20);
    for (auto& s : scores) s = g(rng);
    const double lo = g(rng), hi = lo + std::abs(g(rng));
    const auto a = onion_detect(scores, lo), b = onion_detect(scores, hi);
    EXPECT_TRUE(std::includes(a.flagged.begin(), a.flagged.end(), b.flagged.begin(), b.flagged.end()));
    for (std::size_t i : a.flagged) EXPECT_GT(scores[i], lo);
    EXPECT_EQ(a.flagged.size(),
              static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(),
                                                     [&](double s) { return s > lo; })));
    if (b.verdict == Label::poisoned) { EXPECT_EQ(a.verdict, Label::poisoned); }
  }
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2}, 0.25), 1.25);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.95), 7.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3}, 1.0), 3.0);
  std::vector<double> v(101);
  for (int i = 0; i <= 100; ++i) v[static_cast<std::size_t>(i)] = 100 - i;
  EXPECT_DOUBLE_EQ(quantile(v, 0.95), 95.0);
  EXPECT_THROW(quantile({}, 0.5), Error);
  EXPECT_THROW(quantile({1}, 1.5), Error);
}

TEST(Calibrate, PooledQuantileOfCleanScores) {
  const auto samples = ct::synthetic_samples(40, 9);
  std::vector<Seq> corpus;
  for (const auto& s : samples) corpus.push_back(onion_tokens(s));
  const NGramLM lm = train_ngram_lm(corpus, 3, 0.1);
  const NGramOracle oracle(lm);
  std::vector<double> pooled;
  for (const auto& s : samples) {
    const auto f = suspicion_scores(s.id, onion_tokens(s), oracle);
    pooled.insert(pooled.end(), f.begin(), f.end());
  }
  EXPECT_DOUBLE_EQ(calibrate_threshold(ct::pointers(samples), oracle, 0.95), quantile(pooled, 0.95));
}

// ------------------------------------------------------------ oracle plumbing

TEST(FileOracle, ReadsPerplexityRecords) {
  ct::TempDir dir("onion");
  std::string text;
  const Seq tokens{"a", "b", "c"};
  for (long r = -1; r < 3; ++r)
    text += nlohmann::json{{"id", "m1"}, {"token_index_removed", r},
                           {"perplexity", 10.0 + static_cast<double>(r)}}.dump() + "\n";
  write_text_file(dir / "ppl.jsonl", text);
  const auto oracle = FilePerplexityOracle::from_file(dir / "ppl.jsonl");
  const auto f = suspicion_scores("m1", tokens, oracle);
  EXPECT_EQ(f, (std::vector<double>{-1.0, -2.0, -3.0}));
  EXPECT_THROW(suspicion_scores("m2", tokens, oracle), Error);
}

TEST(FileOracle, CustomOracleDrivesDetection) {
  MapOracle o;
  o.values = {{-1, 50.0}, {0, 49.0}, {1, 10.0}, {2, 50.5}};
  const auto r = onion_detect("x", Seq{"a", "b", "c"}, o, 5.0);
  EXPECT_EQ(r.scores, (std::vector<double>{1.0, 40.0, -0.5}));
  EXPECT_EQ(r.flagged, (std::vector<std::size_t>{1}));
  EXPECT_EQ(r.verdict, Label::poisoned);
}

// ------------------------------------------------------------ trigger tokens

TEST(TriggerTokens, RenameAndInsertionIndices) {
  CodeSample s;
  s.id = "t";
  s.source = "int f(int a) { return a + 1; }";
  const CodeSample renamed = rename_identifier(s, "a", "qq");
  const auto tokens = onion_tokens(renamed);
  const auto idx = trigger_token_indices(renamed);
  ASSERT_EQ(idx.size(), 2u);
  for (std::size_t i : idx) EXPECT_EQ(tokens[i], "qq");
  EXPECT_TRUE(trigger_token_indices(s).empty());

  const auto& templ = default_dead_code_templates().front();
  const std::vector<std::string> names{"zz"};
  const CodeSample dead = insert_dead_code(s, templ, 0, names, 1);
  const auto dtokens = onion_tokens(dead);
  const auto didx = trigger_token_indices(dead);
  // Inserted tokens are exactly those not in the original stream once removed.
  EXPECT_EQ(dtokens.size() - didx.size(), onion_tokens(s).size());
  Seq rest;
  for (std::size_t i = 0; i < dtokens.size(); ++i)
    if (std::find(didx.begin(), didx.end(), i) == didx.end()) rest.push_back(dtokens[i]);
  EXPECT_EQ(rest, onion_tokens(s));
}
