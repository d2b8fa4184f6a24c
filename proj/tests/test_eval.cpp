// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "codeshield/eval.hpp"
#include "codeshield/json_io.hpp"
#include "test_util.hpp"

using namespace codeshield;
namespace ct = codeshield::testing;

namespace {

struct Counted {
  double accuracy, precision, recall, f1;
};

Counted count_metrics(const std::vector<int>& pred, const std::vector<int>& y) {
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (pred[i] == 1 && y[i] == 1) ++tp;
    if (pred[i] == 0 && y[i] == 0) ++tn;
    if (pred[i] == 1 && y[i] == 0) ++fp;
    if (pred[i] == 0 && y[i] == 1) ++fn;
  }
  Counted c;
  c.accuracy = (tp + tn) / static_cast<double>(y.size());
  c.precision = tp + fp == 0 ? 1.0 : tp / (tp + fp);
  c.recall = tp + fn == 0 ? 1.0 : tp / (tp + fn);
  c.f1 = c.precision + c.recall == 0 ? 0.0 : 2 * c.precision * c.recall / (c.precision + c.recall);
  return c;
}

// Probability that a random positive outscores a random negative (ties 1/2).
double mann_whitney_area(const std::vector<double>& p, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (y[i] == 1)
      for (std::size_t j = 0; j < p.size(); ++j)
        if (y[j] == 0) {
          pairs += 1;
          wins += p[i] > p[j] ? 1.0 : p[i] == p[j] ? 0.5 : 0.0;
        }
  return wins / pairs;
}

FeatureLayout two_segment_layout() {
  FeatureLayout l;
  l.config = "test:6+4";
  l.segments = {{"alpha", 6}, {"beta", 4}};
  return l;
}

// Primary manifest with clean/dead_code/codefooler samples over all splits,
// an unseen manifest with the same attacks, and separable random features.
struct LoaoFixture {
  DatasetManifest primary, unseen;
  FeatureTable table;

  LoaoFixture() {
    table.layout = two_segment_layout();
    std::mt19937_64 rng(11);
    std::normal_distribution<float> g;
    const Split splits[] = {Split::train, Split::train, Split::train, Split::train,
                            Split::train, Split::train, Split::val,   Split::test};
    const Attack attacks[] = {Attack::dead_code, Attack::codefooler};
    auto add = [&](DatasetManifest& m, std::string id, Label label, Attack attack, Split split) {
      CodeSample s;
      s.id = std::move(id);
      s.source = "void f() {}";
      s.label = label;
      s.attack = attack;
      s.split = split;
      if (label == Label::poisoned) s.origin_id = "origin";
      std::vector<float> v(10);
      for (auto& x : v) x = g(rng) + (label == Label::poisoned ? 1.5f : -1.5f);
      table.vectors[s.id] = v;
      m.entries.push_back(std::move(s));
    };
    for (int i = 0; i < 160; ++i) {
      const Split split = splits[i % 8];
      add(primary, "c" + std::to_string(i), Label::clean, Attack::none, split);
      add(primary, "p" + std::to_string(i), Label::poisoned, attacks[i % 2], split);
    }
    for (int i = 0; i < 40; ++i) {
      add(unseen, "uc" + std::to_string(i), Label::clean, Attack::none, Split::unseen);
      add(unseen, "up" + std::to_string(i), Label::poisoned, attacks[i % 2], Split::unseen);
    }
  }
};

DetectorConfig small_detector() {
  DetectorConfig c;
  c.conv_channels = {2};
  c.gru_hidden = {4};
  c.dense = {8};
  c.max_epochs = 4;
  c.batch_size = 16;
  return c;
}

}  // namespace

// ------------------------------------------------------------------ metrics

TEST(Metrics, ConfusionCase) {
  const Confusion c{18335, 19249, 751, 1665};
  const auto r = metrics_from_confusion(c);
  EXPECT_NEAR(r.accuracy, 0.940, 0.0005);
  EXPECT_DOUBLE_EQ(r.accuracy, 37584.0 / 40000.0);
  EXPECT_DOUBLE_EQ(r.precision, 18335.0 / 19086.0);
  EXPECT_DOUBLE_EQ(r.recall, 18335.0 / 20000.0);
}

TEST(Metrics, AllCorrectAndDegenerate) {
  const std::vector<int> y{0, 1, 1, 0};
  const auto r = compute_metrics(y, y);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  const std::vector<int> zeros{0, 0, 0}, ones{1, 1, 1};
  const auto none_predicted = compute_metrics(zeros, ones);
  EXPECT_EQ(none_predicted.precision, 1.0);
  EXPECT_EQ(none_predicted.recall, 0.0);
  EXPECT_EQ(none_predicted.f1, 0.0);
  const auto no_positives = compute_metrics(zeros, zeros);
  EXPECT_EQ(no_positives.recall, 1.0);
  EXPECT_THROW(compute_metrics(zeros, y), Error);
  EXPECT_THROW(compute_metrics(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST(Metrics, MatchBruteForceOnRandomSets) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> len(1, 200);
  std::bernoulli_distribution coin;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = len(rng);
    std::vector<int> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = coin(rng);
      y[i] = coin(rng);
    }
    const auto r = compute_metrics(p, y);
    const auto c = count_metrics(p, y);
    EXPECT_NEAR(r.accuracy, c.accuracy, 1e-12);
    EXPECT_NEAR(r.precision, c.precision, 1e-12);
    EXPECT_NEAR(r.recall, c.recall, 1e-12);
    EXPECT_NEAR(r.f1, c.f1, 1e-12);
    EXPECT_EQ(r.confusion.total(), n);
    // Joint shuffles change nothing.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> ps(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] = p[perm[i]];
      ys[i] = y[perm[i]];
    }
    const auto s = compute_metrics(ps, ys);
    EXPECT_EQ(s.confusion, r.confusion);
    EXPECT_EQ(s.f1, r.f1);
  }
}

// ---------------------------------------------------------------------- ROC

TEST(Roc, PerfectSeparation) {
  const std::vector<double> p{0.9, 0.8, 0.3, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  const auto roc = roc_curve(p, y);
  EXPECT_DOUBLE_EQ(roc.area, 1.0);
  EXPECT_EQ(roc.points.front().fpr, 0.0);
  EXPECT_EQ(roc.points.front().tpr, 0.0);
  EXPECT_EQ(roc.points.back().fpr, 1.0);
  EXPECT_EQ(roc.points.back().tpr, 1.0);
  EXPECT_EQ(roc.points.back().threshold, 0.0);
  EXPECT_GT(roc.points.front().threshold, 1.0);
}

TEST(Roc, RandomScoresNearHalf) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  std::bernoulli_distribution coin;
  std::vector<double> p(10000);
  std::vector<int> y(10000);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = u(rng);
    y[i] = coin(rng);
  }
  EXPECT_NEAR(roc_curve(p, y).area, 0.5, 0.02);
}

TEST(Roc, AreaEqualsPairwiseOracleAndReverses) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> level(0, 10);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(60);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = level(rng) / 10.0;  // plenty of ties
      y[i] = coin(rng);
    }
    y[0] = 0;
    y[1] = 1;
    const auto roc = roc_curve(p, y);
    EXPECT_NEAR(roc.area, mann_whitney_area(p, y), 1e-12);
    EXPECT_GE(roc.area, 0.0);
    EXPECT_LE(roc.area, 1.0);
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
      EXPECT_GE(roc.points[i].fpr, roc.points[i - 1].fpr);
      EXPECT_GE(roc.points[i].tpr, roc.points[i - 1].tpr);
    }
    std::vector<double> reversed(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) reversed[i] = 1.0 - p[i];
    EXPECT_NEAR(roc_curve(reversed, y).area, 1.0 - roc.area, 1e-12);
  }
}

TEST(Roc, SingleClassIsAnError) {
  const std::vector<double> p{0.1, 0.2};
  EXPECT_THROW(roc_curve(p, std::vector<int>{1, 1}), Error);
  EXPECT_THROW(roc_curve(p, std::vector<int>{1}), Error);
}

TEST(Roc, CsvHasOneRowPerPoint) {
  const std::vector<double> p{0.9, 0.4, 0.4, 0.1};
  const std::vector<int> y{1, 0, 1, 0};
  const auto roc = roc_curve(p, y);
  const std::string csv = roc_csv(roc);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), roc.points.size() + 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "threshold,fpr,tpr");
}

// ---------------------------------------------------------------- histogram

TEST(Histogram, BinningMatchesBruteForce) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u;
  std::bernoulli_distribution coin;
  std::vector<double> p(5000);
  std::vector<int> y(5000);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = u(rng);
    y[i] = coin(rng);
  }
  p[0] = 1.0;
  p[1] = 0.0;
  for (std::size_t bins : {1u, 7u, 10u, 64u}) {
    const auto h = probability_histogram(p, y, bins);
    std::vector<std::size_t> clean(bins), poisoned(bins);
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::size_t b = 0;
      while (b + 1 < bins && p[i] >= static_cast<double>(b + 1) / static_cast<double>(bins)) ++b;
      (y[i] ? poisoned : clean)[b]++;
    }
    EXPECT_EQ(h.clean, clean) << bins;
    EXPECT_EQ(h.poisoned, poisoned) << bins;
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    EXPECT_EQ(std::accumulate(h.poisoned.begin(), h.poisoned.end(), std::size_t{0}), pos);
    EXPECT_EQ(std::accumulate(h.clean.begin(), h.clean.end(), std::size_t{0}), y.size() - pos);
  }
  const auto one = probability_histogram(p, y, 1);
  EXPECT_EQ(one.clean[0] + one.poisoned[0], p.size());
  const auto empty_class = probability_histogram(std::vector<double>{0.2, 0.7}, std::vector<int>{1, 1}, 4);
  EXPECT_EQ(empty_class.clean, std::vector<std::size_t>(4, 0));
  EXPECT_THROW(probability_histogram(p, y, 0), Error);
}

// ------------------------------------------------------------------- report

TEST(Report, EvaluateScoresAndJson) {
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const std::vector<double> p{0.7, 0.2, 0.5, 0.49};
  const std::vector<int> y{1, 0, 0, 1};
  const auto r = evaluate_scores(ids, p, y);
  EXPECT_EQ(r.confusion, (Confusion{1, 1, 1, 1}));
  EXPECT_EQ(r.probabilities.size(), 4u);
  EXPECT_FALSE(r.roc.points.empty());
  const auto j = to_json(r);
  EXPECT_EQ(j.at("accuracy").get<double>(), 0.5);
  EXPECT_EQ(j.at("confusion").at("tp").get<int>(), 1);
  const auto single = evaluate_scores({"x"}, std::vector<double>{0.9}, std::vector<int>{1});
  EXPECT_TRUE(single.roc.points.empty());
}

// ------------------------------------------------------- saliency / projection

TEST(Saliency, SegmentSumsAndCsv) {
  const auto layout = two_segment_layout();
  std::vector<double> s(10);
  std::iota(s.begin(), s.end(), 1.0);
  const auto sums = segment_sums(s, layout);
  ASSERT_EQ(sums.size(), 2u);
  EXPECT_EQ(sums[0], (std::pair<std::string, double>{"alpha", 21.0}));
  EXPECT_EQ(sums[1], (std::pair<std::string, double>{"beta", 34.0}));
  const std::string csv = saliency_csv({"m1"}, {s}, layout);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,alpha,beta");
}

TEST(Projection, RecordCountAndBitwiseRoundTrip) {
  ct::TempDir dir("projection");
  const auto layout = two_segment_layout();
  std::mt19937_64 rng(5);
  std::normal_distribution<float> g;
  std::vector<FeatureVector> vectors;
  std::map<std::string, Label> labels;
  for (int i = 0; i < 7; ++i) {
    FeatureVector v{"s" + std::to_string(i), std::vector<float>(10)};
    for (auto& x : v.values) x = g(rng);
    labels[v.id] = i % 2 ? Label::poisoned : Label::clean;
    vectors.push_back(v);
  }
  export_vectors_for_projection(vectors, labels, layout, dir / "proj.jsonl");
  std::ifstream in(dir / "proj.jsonl");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line[0], '#');
  std::size_t records = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto& v = *std::find_if(vectors.begin(), vectors.end(),
                                  [&](const FeatureVector& f) { return f.id == j.at("id"); });
    const std::string seg = j.at("segment");
    const std::size_t off = layout.offset(seg);
    const auto values = j.at("values").get<std::vector<float>>();
    for (std::size_t k = 0; k < values.size(); ++k) EXPECT_EQ(values[k], v.values[off + k]);
    ++records;
  }
  EXPECT_EQ(records, vectors.size() * layout.segments.size());

  export_vectors_for_projection({}, {}, layout, dir / "empty.jsonl");
  const std::string empty = read_text_file(dir / "empty.jsonl");
  EXPECT_EQ(empty[0], '#');
  EXPECT_EQ(std::count(empty.begin(), empty.end(), '\n'), 1);
  write_text_file(dir / "plain", "not a directory");
  EXPECT_THROW(export_vectors_for_projection(vectors, labels, layout, dir / "plain" / "p.jsonl"),
               Error);
}

// ------------------------------------------------------------- protocols

TEST(Loao, ExcludedAttackNeverTrainsAndTestIsBalanced) {
  const LoaoFixture f;
  for (Attack a : {Attack::dead_code, Attack::codefooler}) {
    const auto res = leave_one_attack_out(f.primary, f.unseen, a, f.table, f.table.layout,
                                          small_detector(), 3);
    EXPECT_EQ(res.report.metadata.at("excluded_in_training").get<int>(), 0);
    EXPECT_EQ(res.report.metadata.at("excluded_attack").get<std::string>(), to_string(a));
    EXPECT_EQ(res.report.metadata.at("test_poisoned").get<int>(), 20);
    EXPECT_EQ(res.report.metadata.at("test_clean").get<int>(), 20);
    EXPECT_EQ(res.report.confusion.total(), 40u);
    for (const auto& [id, p] : res.report.probabilities) {
      const bool unseen = id.rfind("u", 0) == 0;
      EXPECT_TRUE(unseen) << id;
    }
  }
  EXPECT_THROW(leave_one_attack_out(f.primary, f.unseen, Attack::mhm, f.table, f.table.layout,
                                    small_detector(), 3),
               Error);
  EXPECT_THROW(leave_one_attack_out(f.primary, f.unseen, Attack::none, f.table, f.table.layout,
                                    small_detector(), 3),
               Error);
}

TEST(Loao, SameSeedSameReport) {
  const LoaoFixture f;
  const auto a = leave_one_attack_out(f.primary, f.unseen, Attack::dead_code, f.table,
                                      f.table.layout, small_detector(), 9);
  const auto b = leave_one_attack_out(f.primary, f.unseen, Attack::dead_code, f.table,
                                      f.table.layout, small_detector(), 9);
  EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump());
}

TEST(Ablation, ValidatesModesAndReportsLengths) {
  AblationSpec dup{{FeatureMode::only_embeddings, FeatureMode::only_embeddings}};
  EXPECT_THROW(dup.validate(), ConfigError);
  EXPECT_THROW(AblationSpec{}.validate(), ConfigError);

  const LoaoFixture f;
  FeatureLayout alpha;
  alpha.config = "alpha:6";
  alpha.segments = {{"alpha", 6}};
  FeatureLayout beta;
  beta.config = "beta:4";
  beta.segments = {{"beta", 4}};
  const std::map<FeatureMode, FeatureLayout> layouts{{FeatureMode::all_features, f.table.layout},
                                                     {FeatureMode::single_path, alpha},
                                                     {FeatureMode::single_text, beta}};
  const AblationSpec spec{{FeatureMode::all_features, FeatureMode::single_path, FeatureMode::single_text}};
  const DetectorConfig c = small_detector();
  const auto rows = feature_ablation(f.primary, f.table, layouts, spec, c);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].feature_length, 10u);
  EXPECT_EQ(rows[1].feature_length, 6u);
  EXPECT_EQ(rows[2].feature_length, 4u);
  EXPECT_EQ(rows[0].report.confusion.total(), f.primary.select(std::nullopt, std::nullopt, Split::test).size());
  const std::string csv = ablation_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("single:path"), std::string::npos);
}

TEST(FeatureTableGather, SlicesTargetSegments) {
  const LoaoFixture f;
  FeatureLayout beta;
  beta.config = "beta:4";
  beta.segments = {{"beta", 4}};
  const auto samples = f.primary.select(std::nullopt, std::nullopt, Split::val);
  const auto lv = f.table.gather(samples, beta);
  ASSERT_EQ(lv.features.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& full = f.table.vectors.at(samples[i]->id);
    EXPECT_EQ(lv.features[i], std::vector<float>(full.begin() + 6, full.end()));
    EXPECT_EQ(lv.labels[i], samples[i]->label == Label::poisoned ? 1 : 0);
  }
}
