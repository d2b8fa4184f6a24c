// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "codeshield/common.hpp"
#include "codeshield/json_io.hpp"

namespace codeshield {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b)
    throw Error("predictions and labels differ in length (" + std::to_string(a) + " vs " +
                std::to_string(b) + ")");
  if (a == 0) throw Error("cannot compute metrics on an empty set");
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

EvaluationReport metrics_from_confusion(const Confusion& c) {
  EvaluationReport r;
  r.confusion = c;
  const double n = static_cast<double>(c.total());
  r.accuracy = n > 0 ? static_cast<double>(c.tp + c.tn) / n : 0.0;
  r.precision = c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r.recall = c.tp + c.fn == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.f1 = r.precision + r.recall == 0 ? 0.0
                                      : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

EvaluationReport compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size());
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == 1, y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (!p && !y) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return metrics_from_confusion(c);
}

RocCurve roc_curve(std::span<const double> p, std::span<const int> labels) {
  check_lengths(p.size(), labels.size());
  std::size_t pos = 0;
  for (int y : labels) pos += y == 1;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error("ROC needs both clean and poisoned labels");

  std::vector<std::size_t> order(p.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });

  RocCurve roc;
  const double top = std::max(1.0, p[order.front()]);
  roc.points.push_back({std::nextafter(top, 2 * top + 1), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double t = p[order[k]];
    for (; k < order.size() && p[order[k]] == t; ++k) (labels[order[k]] == 1 ? tp : fp)++;
    roc.points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
  }
  if (roc.points.back().threshold > 0) roc.points.push_back({0.0, 1.0, 1.0});
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const auto& a = roc.points[i - 1];
    const auto& b = roc.points[i];
    roc.area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2;
  }
  return roc;
}

Histogram probability_histogram(std::span<const double> p, std::span<const int> labels,
                                std::size_t bins) {
  if (bins == 0) throw Error("histogram needs at least one bin");
  if (p.size() != labels.size()) throw Error("scores and labels differ in length");
  Histogram h{bins, std::vector<std::size_t>(bins, 0), std::vector<std::size_t>(bins, 0)};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = std::clamp(p[i], 0.0, 1.0);
    const auto b = std::min(static_cast<std::size_t>(std::floor(x * static_cast<double>(bins))),
                            bins - 1);
    (labels[i] == 1 ? h.poisoned : h.clean)[b]++;
  }
  return h;
}

EvaluationReport evaluate_scores(const std::vector<std::string>& ids,
                                 std::span<const double> p_poison, std::span<const int> labels) {
  check_lengths(p_poison.size(), labels.size());
  if (ids.size() != labels.size()) throw Error("ids and labels differ in length");
  std::vector<int> pred(p_poison.size());
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = p_poison[i] >= 0.5 ? 1 : 0;
  EvaluationReport r = compute_metrics(pred, labels);
  const bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                    std::count(labels.begin(), labels.end(), 0) > 0;
  if (both) r.roc = roc_curve(p_poison, labels);
  for (std::size_t i = 0; i < ids.size(); ++i) r.probabilities.emplace_back(ids[i], p_poison[i]);
  return r;
}

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& pt : r.roc.points)
    roc.push_back({{"threshold", pt.threshold}, {"fpr", pt.fpr}, {"tpr", pt.tpr}});
  nlohmann::json probs = nlohmann::json::array();
  for (const auto& [id, p] : r.probabilities) probs.push_back({{"id", id}, {"p_poison", p}});
  return {{"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"confusion",
           {{"tp", r.confusion.tp}, {"tn", r.confusion.tn}, {"fp", r.confusion.fp},
            {"fn", r.confusion.fn}}},
          {"roc", {{"points", roc}, {"area", r.roc.area}}},
          {"probabilities", probs},
          {"metadata", r.metadata}};
}

std::string roc_csv(const RocCurve& roc) {
  std::ostringstream os;
  os << "threshold,fpr,tpr\n";
  for (const auto& pt : roc.points)
    os << number(pt.threshold) << ',' << number(pt.fpr) << ',' << number(pt.tpr) << '\n';
  return os.str();
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  os << "bin,lower,upper,clean,poisoned\n";
  for (std::size_t b = 0; b < h.bins; ++b)
    os << b << ',' << number(static_cast<double>(b) / static_cast<double>(h.bins)) << ','
       << number(static_cast<double>(b + 1) / static_cast<double>(h.bins)) << ',' << h.clean[b]
       << ',' << h.poisoned[b] << '\n';
  return os.str();
}

std::vector<std::pair<std::string, double>> segment_sums(std::span<const double> saliency,
                                                         const FeatureLayout& layout) {
  if (saliency.size() != layout.size())
    throw Error("saliency length does not match the feature layout");
  std::vector<std::pair<std::string, double>> out;
  std::size_t off = 0;
  for (const auto& seg : layout.segments) {
    double s = 0;
    for (std::size_t i = off; i < off + seg.length; ++i) s += saliency[i];
    out.emplace_back(seg.name, s);
    off += seg.length;
  }
  return out;
}

std::string saliency_csv(const std::vector<std::string>& ids,
                         const std::vector<std::vector<double>>& saliency,
                         const FeatureLayout& layout) {
  std::ostringstream os;
  os << "id";
  for (const auto& seg : layout.segments) os << ',' << seg.name;
  os << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    os << ids[i];
    for (const auto& [_, s] : segment_sums(saliency[i], layout)) os << ',' << number(s);
    os << '\n';
  }
  return os.str();
}

void export_vectors_for_projection(const std::vector<FeatureVector>& vectors,
                                   const std::map<std::string, Label>& labels,
                                   const FeatureLayout& layout, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "# projection input: one record per sample and segment, layout " << layout.config << '\n';
  for (const auto& v : vectors) {
    if (v.values.size() != layout.size())
      throw Error("feature vector " + v.id + " does not match layout " + layout.config);
    auto it = labels.find(v.id);
    if (it == labels.end()) throw Error("no label for feature vector " + v.id);
    std::size_t off = 0;
    for (const auto& seg : layout.segments) {
      std::vector<float> part(v.values.begin() + off, v.values.begin() + off + seg.length);
      os << nlohmann::json{{"id", v.id},
                           {"label", std::string(to_string(it->second))},
                           {"segment", seg.name},
                           {"values", part}}
                .dump()
         << '\n';
      off += seg.length;
    }
  }
  write_text_file(path, os.str());
}

LabeledVectors FeatureTable::gather(const std::vector<const CodeSample*>& samples,
                                    const FeatureLayout& target) const {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (const auto& seg : target.segments) spans.emplace_back(layout.offset(seg.name), seg.length);
  LabeledVectors out;
  for (const CodeSample* s : samples) {
    auto it = vectors.find(s->id);
    if (it == vectors.end()) throw Error("no feature vector for sample " + s->id);
    std::vector<float> v;
    v.reserve(target.size());
    for (const auto& [off, len] : spans)
      v.insert(v.end(), it->second.begin() + off, it->second.begin() + off + len);
    out.features.push_back(std::move(v));
    out.labels.push_back(s->label == Label::poisoned ? 1 : 0);
  }
  return out;
}

ExperimentResult train_and_evaluate(const std::vector<const CodeSample*>& train_samples,
                                    const std::vector<const CodeSample*>& val_samples,
                                    const std::vector<const CodeSample*>& test_samples,
                                    const FeatureTable& table, const FeatureLayout& layout,
                                    const DetectorConfig& config) {
  const LabeledVectors tr = table.gather(train_samples, layout);
  const LabeledVectors va = table.gather(val_samples, layout);
  const LabeledVectors te = table.gather(test_samples, layout);
  ExperimentResult res{{}, {}, build_model(layout.size(), config)};
  res.training = train(res.model, tr, va);
  const auto p = predict_poison(res.model, te.features);
  std::vector<std::string> ids;
  for (const CodeSample* s : test_samples) ids.push_back(s->id);
  res.report = evaluate_scores(ids, p, te.labels);
  res.report.metadata["feature_config"] = layout.config;
  res.report.metadata["train_samples"] = train_samples.size();
  res.report.metadata["val_samples"] = val_samples.size();
  res.report.metadata["test_samples"] = test_samples.size();
  return res;
}

ExperimentResult leave_one_attack_out(const DatasetManifest& primary,
                                      const DatasetManifest& unseen, Attack excluded,
                                      const FeatureTable& table, const FeatureLayout& layout,
                                      const DetectorConfig& config, std::uint64_t seed) {
  if (excluded == Attack::none) throw Error("leave-one-attack-out needs an attack to exclude");
  const std::string name(to_string(excluded));
  if (primary.select(Label::poisoned, excluded, std::nullopt).empty())
    throw Error("attack " + name + " is absent from the primary manifest");
  auto held = unseen.select(Label::poisoned, excluded, std::nullopt);
  if (held.empty()) throw Error("attack " + name + " is absent from the unseen manifest");

  auto without = [&](Split split) {
    std::vector<const CodeSample*> out;
    for (const CodeSample* s : primary.select(std::nullopt, std::nullopt, split))
      if (s->attack != excluded) out.push_back(s);
    return out;
  };
  const auto train_samples = without(Split::train);
  const auto val_samples = without(Split::val);

  auto clean = unseen.select(Label::clean, std::nullopt, std::nullopt);
  std::sort(clean.begin(), clean.end(), [&](const CodeSample* a, const CodeSample* b) {
    const auto ka = derive_seed(seed, a->id), kb = derive_seed(seed, b->id);
    return ka != kb ? ka < kb : a->id < b->id;
  });
  if (clean.size() < held.size())
    throw Error("unseen manifest has " + std::to_string(clean.size()) +
                " clean samples, fewer than the " + std::to_string(held.size()) + " " + name +
                " samples");
  clean.resize(held.size());
  std::vector<const CodeSample*> test = held;
  test.insert(test.end(), clean.begin(), clean.end());

  ExperimentResult res = train_and_evaluate(train_samples, val_samples, test, table, layout, config);
  std::size_t leaked = 0;
  for (const auto* s : train_samples) leaked += s->attack == excluded;
  for (const auto* s : val_samples) leaked += s->attack == excluded;
  res.report.metadata["excluded_attack"] = name;
  res.report.metadata["excluded_in_training"] = leaked;
  res.report.metadata["test_poisoned"] = held.size();
  res.report.metadata["test_clean"] = clean.size();
  return res;
}

void AblationSpec::validate() const {
  if (modes.empty()) throw ConfigError("ablation needs at least one feature mode");
  std::set<FeatureMode> seen;
  for (FeatureMode m : modes)
    if (!seen.insert(m).second)
      throw ConfigError("ablation lists feature mode " + std::string(to_string(m)) + " twice");
}

std::vector<AblationRow> feature_ablation(const DatasetManifest& primary,
                                          const FeatureTable& table,
                                          const std::map<FeatureMode, FeatureLayout>& layouts,
                                          const AblationSpec& spec, const DetectorConfig& config) {
  spec.validate();
  const auto tr = primary.select(std::nullopt, std::nullopt, Split::train);
  const auto va = primary.select(std::nullopt, std::nullopt, Split::val);
  const auto te = primary.select(std::nullopt, std::nullopt, Split::test);
  std::vector<AblationRow> rows;
  for (FeatureMode m : spec.modes) {
    auto it = layouts.find(m);
    if (it == layouts.end())
      throw Error("no feature layout for mode " + std::string(to_string(m)));
    auto res = train_and_evaluate(tr, va, te, table, it->second, config);
    res.report.metadata["feature_mode"] = std::string(to_string(m));
    rows.push_back({m, it->second.size(), std::move(res.report)});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "mode,feature_length,accuracy,precision,recall,f1,roc_area\n";
  for (const auto& r : rows)
    os << to_string(r.mode) << ',' << r.feature_length << ',' << number(r.report.accuracy) << ','
       << number(r.report.precision) << ',' << number(r.report.recall) << ','
       << number(r.report.f1) << ',' << number(r.report.roc.area) << '\n';
  return os.str();
}

}  // namespace codeshield
