// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "codeshield/attacks.hpp"
#include "codeshield/contextual.hpp"
#include "codeshield/eval.hpp"
#include "codeshield/json_io.hpp"
#include "codeshield/onion.hpp"
#include "codeshield/synthetic.hpp"
#include "codeshield/text.hpp"

namespace codeshield {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kSyntheticPrefix = "synthetic:";

// Write-once output directory of one stage.
class StageWriter {
 public:
  StageWriter(const fs::path& root, std::string stage) : stage_(std::move(stage)), dir_(root / stage_) {
    if (fs::exists(dir_ / "artifacts.json"))
      throw StageError(stage_, "outputs already exist in " + dir_.string() +
                                   "; stages are write-once, use a fresh workdir");
    fs::create_directories(dir_);
  }

  fs::path claim(const std::string& name) const {
    const fs::path p = dir_ / name;
    if (fs::exists(p)) throw StageError(stage_, p.string() + " already exists");
    return p;
  }

  void write(const std::string& name, const std::string& text) const {
    write_text_file(claim(name), text);
  }

  void write_json(const std::string& name, const json& j) const { write(name, j.dump(2) + "\n"); }

  // Lists every file in the stage directory with size and content hash.
  json finish(json summary) const {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir_))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    json list = json::array();
    for (const auto& f : files) {
      const std::string text = read_text_file(f);
      list.push_back({{"path", fs::relative(f, dir_.parent_path()).generic_string()},
                      {"bytes", text.size()},
                      {"fnv1a64", to_hex(fnv1a64(text))}});
    }
    summary["stage"] = stage_;
    write_text_file(claim("artifacts.json"),
                    json{{"stage", stage_}, {"files", list}, {"summary", summary}}.dump(2) + "\n");
    return summary;
  }

 private:
  std::string stage_;
  fs::path dir_;
};

template <typename F>
json run_stage(const std::string& stage, F&& body) {
  std::cout << "[" << stage << "] running" << std::endl;
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& ex) {
    throw StageError(stage, ex.what());
  }
}

std::vector<const CodeSample*> pointers(const DatasetManifest& m) {
  std::vector<const CodeSample*> out;
  for (const auto& s : m.entries) out.push_back(&s);
  return out;
}

json counts_json(const DatasetManifest& m) {
  json out = json::array();
  for (const auto& [key, n] : m.counts().cells) {
    const auto& [label, attack, split] = key;
    out.push_back({{"label", to_string(label)},
                   {"attack", to_string(attack)},
                   {"split", to_string(split)},
                   {"count", n}});
  }
  return out;
}

ContextualAdapter make_contextual(const RunConfig& c) {
  if (!c.contextual_file.empty()) return ContextualAdapter::from_file(c.contextual_file);
  return ContextualAdapter::stub(derive_seed(c.seed, "contextual"));
}

std::map<Attack, std::size_t> attack_counts(const RunConfig& c, std::size_t pool) {
  const auto total = static_cast<std::size_t>(std::llround(c.poison_fraction * static_cast<double>(pool)));
  std::map<Attack, std::size_t> out;
  std::size_t assigned = 0;
  for (Attack a : kAllAttacks) {
    auto it = c.attack_mix.find(a);
    const double share = it == c.attack_mix.end() ? 0.0 : it->second;
    out[a] = static_cast<std::size_t>(std::floor(share * static_cast<double>(total)));
    assigned += out[a];
  }
  // Remainder goes to attacks with a positive share, in the fixed attack order.
  for (Attack a : kAllAttacks) {
    if (assigned >= total) break;
    auto it = c.attack_mix.find(a);
    if (it != c.attack_mix.end() && it->second > 0) {
      ++out[a];
      ++assigned;
    }
  }
  for (auto it = out.begin(); it != out.end();) it = it->second == 0 ? out.erase(it) : std::next(it);
  return out;
}

struct Embedded {
  SubwordHashEmbedder subword;
  PathContextEmbedder paths;
  ContextualAdapter contextual;
  Embedders view() const { return {&subword, &paths, &contextual}; }
};

Embedded load_embedders(const RunConfig& c, const fs::path& dir) {
  return {SubwordHashEmbedder::load(dir / "subword.ckpt"), PathContextEmbedder::load(dir / "paths.ckpt"),
          make_contextual(c)};
}

FeatureTable load_table(const fs::path& path) {
  FeatureTable t;
  for (auto& v : read_features(path, &t.layout)) t.vectors[v.id] = std::move(v.values);
  return t;
}

double l2_distance(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (static_cast<double>(a[i]) - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

json metrics_json(const EvaluationReport& r) {
  return {{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall},
          {"f1", r.f1}, {"roc_area", r.roc.area}};
}

}  // namespace

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {}

fs::path Pipeline::stage_dir(const std::string& stage) const { return config_.workdir / stage; }

json Pipeline::ingest() {
  return run_stage("ingest", [&] {
    StageWriter out(config_.workdir, "ingest");
    DatasetManifest all;
    IngestStats stats;
    if (config_.corpus.rfind(kSyntheticPrefix, 0) == 0) {
      std::size_t n = std::stoull(config_.corpus.substr(kSyntheticPrefix.size()));
      if (config_.corpus_limit > 0) n = std::min(n, config_.corpus_limit);
      std::vector<CodeSample> samples;
      for (auto& src : generate_synthetic_corpus(n, derive_seed(config_.seed, "synthetic")))
        samples.push_back(make_clean_sample(std::move(src)));
      all.entries = deduplicate(std::move(samples));
      all.provenance = config_.corpus;
      stats.files_read = n;
      stats.duplicates = n - all.entries.size();
    } else {
      all = ingest_corpus(config_.corpus, config_.corpus_limit, &stats);
    }

    // Held-out pool for unseen-attack evaluation, chosen by a seeded hash of the id.
    std::vector<std::size_t> order(all.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::uint64_t useed = derive_seed(config_.seed, "unseen");
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto ka = derive_seed(useed, all.entries[a].id), kb = derive_seed(useed, all.entries[b].id);
      return ka != kb ? ka < kb : all.entries[a].id < all.entries[b].id;
    });
    const auto n_unseen = static_cast<std::size_t>(
        std::llround(config_.unseen_fraction * static_cast<double>(order.size())));
    std::vector<bool> held(order.size(), false);
    for (std::size_t i = 0; i < n_unseen; ++i) held[order[i]] = true;
    DatasetManifest primary, unseen;
    primary.seed = unseen.seed = config_.seed;
    primary.provenance = all.provenance + " | primary pool";
    unseen.provenance = all.provenance + " | unseen pool";
    for (std::size_t i = 0; i < all.entries.size(); ++i) {
      CodeSample s = all.entries[i];
      if (held[i]) {
        s.split = Split::unseen;
        unseen.entries.push_back(std::move(s));
      } else {
        primary.entries.push_back(std::move(s));
      }
    }
    write_manifest(out.claim("primary.jsonl"), primary);
    write_manifest(out.claim("unseen.jsonl"), unseen);
    std::cout << "[ingest] " << primary.entries.size() << " primary, " << unseen.entries.size()
              << " unseen samples" << std::endl;
    return out.finish({{"primary", primary.entries.size()},
                       {"unseen", unseen.entries.size()},
                       {"files_read", stats.files_read},
                       {"skipped", stats.skipped},
                       {"duplicates", stats.duplicates}});
  });
}

json Pipeline::train_victim() {
  return run_stage("train-victim", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("ingest") / "primary.jsonl");
    StageWriter out(config_.workdir, "victim");
    const auto samples = pointers(primary);
    const LinearVictim v =
        train_toy_victim(samples, config_.victim_classes, derive_seed(config_.seed, "victim"));
    v.save(out.claim("victim.ckpt"));
    std::cout << "[train-victim] training accuracy " << v.training_accuracy() << std::endl;
    return out.finish({{"classes", v.classes()}, {"training_accuracy", v.training_accuracy()}});
  });
}

json Pipeline::train_embedders() {
  return run_stage("train-embedders", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("ingest") / "primary.jsonl");
    StageWriter out(config_.workdir, "embedders");
    std::vector<std::string> sources;
    for (const auto& s : primary.entries) sources.push_back(s.source);
    const auto subword = train_subword_embedder(normalize_corpus(sources), config_.subword);
    subword.save(out.claim("subword.ckpt"));
    double path_accuracy = 0;
    const auto paths = train_path_embedder(pointers(primary), config_.paths, &path_accuracy);
    paths.save(out.claim("paths.ckpt"));
    std::cout << "[train-embedders] subword vocabulary " << subword.vocabulary().size()
              << ", path model training top-1 " << path_accuracy << std::endl;
    return out.finish({{"subword_vocabulary", subword.vocabulary().size()},
                       {"name_classes", paths.classes().size()},
                       {"path_training_accuracy", path_accuracy},
                       {"contextual", config_.contextual_file.empty() ? "stub" : "file"}});
  });
}

json Pipeline::poison() {
  return run_stage("poison", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("ingest") / "primary.jsonl");
    const DatasetManifest unseen = read_manifest(stage_dir("ingest") / "unseen.jsonl");
    const LinearVictim victim = LinearVictim::load(stage_dir("victim") / "victim.ckpt");
    const SubwordHashEmbedder subword = SubwordHashEmbedder::load(stage_dir("embedders") / "subword.ckpt");
    StageWriter out(config_.workdir, "poison");

    const auto vocabulary = identifier_vocabulary(pointers(primary));
    const IdentifierNeighbors neighbors(subword, vocabulary);
    const AttackResources resources{&victim, &neighbors, vocabulary};
    std::map<Attack, AttackConfig> configs;
    for (Attack a : kAllAttacks) {
      AttackConfig ac;
      ac.strategy = a;
      ac.max_iterations = config_.max_iterations;
      ac.candidate_pool_size = config_.candidate_pool_size;
      ac.seed = derive_seed(config_.seed, "attack:" + std::string(to_string(a)));
      configs[a] = ac;
    }

    DatasetManifest poisoned = poison_dataset(primary, attack_counts(config_, primary.entries.size()),
                                              configs, resources, derive_seed(config_.seed, "poison"));
    poisoned = split_dataset(std::move(poisoned), config_.split, derive_seed(config_.seed, "split"));
    DatasetManifest held;
    if (!unseen.entries.empty()) {
      held = poison_dataset(unseen, attack_counts(config_, unseen.entries.size()), configs,
                            resources, derive_seed(config_.seed, "poison-unseen"));
      for (auto& s : held.entries) s.split = Split::unseen;
    } else {
      held = unseen;
    }
    write_manifest(out.claim("primary.jsonl"), poisoned);
    write_manifest(out.claim("unseen.jsonl"), held);

    json per_attack = json::object();
    for (Attack a : kAllAttacks) {
      std::size_t n = 0, steps = 0;
      for (const CodeSample* s : poisoned.select(Label::poisoned, a, std::nullopt)) {
        ++n;
        steps += s->transform_log.size();
      }
      per_attack[std::string(to_string(a))] = {
          {"count", n},
          {"mean_transformations", n ? static_cast<double>(steps) / static_cast<double>(n) : 0.0}};
    }
    std::cout << "[poison] " << poisoned.select(Label::poisoned, std::nullopt, std::nullopt).size()
              << " poisoned of " << poisoned.entries.size() << " primary samples" << std::endl;
    return out.finish({{"primary_counts", counts_json(poisoned)},
                       {"unseen_counts", counts_json(held)},
                       {"attacks", per_attack}});
  });
}

json Pipeline::embed() {
  return run_stage("embed", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("poison") / "primary.jsonl");
    const DatasetManifest unseen = read_manifest(stage_dir("poison") / "unseen.jsonl");
    const Embedded emb = load_embedders(config_, stage_dir("embedders"));
    StageWriter out(config_.workdir, "embed");
    auto samples = pointers(primary);
    for (const auto* s : pointers(unseen)) samples.push_back(s);
    emb.contextual.require(samples);
    const FeatureLayout layout = feature_layout(config_.feature_mode, emb.view());
    const auto vectors = assemble_all(samples, emb.view(), config_.feature_mode);
    write_features(out.claim("features.jsonl"), layout, vectors);
    std::cout << "[embed] " << vectors.size() << " vectors of length " << layout.size() << std::endl;
    return out.finish({{"vectors", vectors.size()}, {"layout", layout.config}});
  });
}

json Pipeline::train_detector() {
  return run_stage("train-detector", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("poison") / "primary.jsonl");
    const FeatureTable table = load_table(stage_dir("embed") / "features.jsonl");
    StageWriter out(config_.workdir, "detector");
    const auto tr = table.gather(primary.select(std::nullopt, std::nullopt, Split::train), table.layout);
    const auto va = table.gather(primary.select(std::nullopt, std::nullopt, Split::val), table.layout);
    DetectorModel model = build_model(table.layout.size(), config_.detector);
    TrainReport report = train(model, tr, va);
    report.checkpoint = "detector/model.ckpt";
    save_model(model, out.claim("model.ckpt"));
    out.write_json("train_report.json", report_to_json(report));
    std::cout << "[train-detector] stopped at epoch " << report.stopping_epoch << ", best epoch "
              << report.best_epoch << " (val loss " << report.best_val_loss << ")" << std::endl;
    return out.finish({{"parameters", model.parameter_count()},
                       {"stopping_epoch", report.stopping_epoch},
                       {"best_epoch", report.best_epoch},
                       {"best_val_loss", report.best_val_loss}});
  });
}

json Pipeline::evaluate() {
  return run_stage("evaluate", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("poison") / "primary.jsonl");
    const FeatureTable table = load_table(stage_dir("embed") / "features.jsonl");
    const DetectorModel model = load_model(stage_dir("detector") / "model.ckpt");
    const PathContextEmbedder paths = PathContextEmbedder::load(stage_dir("embedders") / "paths.ckpt");
    StageWriter out(config_.workdir, "evaluate");

    const auto test = primary.select(std::nullopt, std::nullopt, Split::test);
    const LabeledVectors te = table.gather(test, table.layout);
    const auto p = predict_poison(model, te.features);
    std::vector<std::string> ids;
    for (const auto* s : test) ids.push_back(s->id);
    EvaluationReport report = evaluate_scores(ids, p, te.labels);

    json per_attack = json::object();
    for (Attack a : kAllAttacks) {
      std::size_t n = 0, hit = 0;
      for (std::size_t i = 0; i < test.size(); ++i)
        if (test[i]->attack == a) {
          ++n;
          hit += p[i] >= 0.5;
        }
      per_attack[std::string(to_string(a))] = {
          {"samples", n}, {"recall", n ? static_cast<double>(hit) / static_cast<double>(n) : 0.0}};
    }

    // Path-embedding distance between each poisoned sample and its clean origin.
    json contrast = json::object();
    for (Attack a : kAllAttacks) {
      const auto poisoned = primary.select(Label::poisoned, a, std::nullopt);
      std::vector<double> d(poisoned.size(), -1.0);
#pragma omp parallel for schedule(dynamic, 8)
      for (std::size_t i = 0; i < poisoned.size(); ++i) {
        auto it = primary.origins.find(poisoned[i]->origin_id);
        if (it == primary.origins.end()) continue;
        d[i] = l2_distance(paths.code_vector(parse_method(it->second)),
                           paths.code_vector(parse_method(poisoned[i]->source)));
      }
      double sum = 0;
      std::size_t n = 0;
      for (double x : d)
        if (x >= 0) {
          sum += x;
          ++n;
        }
      contrast[std::string(to_string(a))] = {{"pairs", n}, {"mean_l2", n ? sum / static_cast<double>(n) : 0.0}};
    }

    const Histogram hist = probability_histogram(p, te.labels, config_.histogram_bins);
    const std::size_t ns = std::min(config_.saliency_samples, test.size());
    std::vector<std::vector<double>> sal(ns);
    std::vector<std::string> sal_ids(ids.begin(), ids.begin() + static_cast<long>(ns));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < ns; ++i) sal[i] = saliency(model, te.features[i]);
    json seg_mean = json::object();
    for (const auto& seg : table.layout.segments) seg_mean[seg.name] = 0.0;
    for (const auto& s : sal)
      for (const auto& [name, v] : segment_sums(s, table.layout))
        seg_mean[name] = seg_mean[name].get<double>() + v / static_cast<double>(ns);

    std::vector<FeatureVector> vectors;
    std::map<std::string, Label> labels;
    for (std::size_t i = 0; i < test.size(); ++i) {
      vectors.push_back({test[i]->id, te.features[i]});
      labels[test[i]->id] = test[i]->label;
    }

    report.metadata = {{"dataset", primary.provenance},
                       {"feature_config", table.layout.config},
                       {"model_parameters", model.parameter_count()},
                       {"test_samples", test.size()},
                       {"per_attack", per_attack},
                       {"embedding_contrast", contrast},
                       {"saliency_segment_means", seg_mean}};
    out.write_json("report.json", to_json(report));
    out.write("roc.csv", roc_csv(report.roc));
    out.write("histogram.csv", histogram_csv(hist));
    out.write("saliency.csv", saliency_csv(sal_ids, sal, table.layout));
    export_vectors_for_projection(vectors, labels, table.layout, out.claim("projection.jsonl"));
    std::cout << "[evaluate] test accuracy " << report.accuracy << ", F1 " << report.f1
              << ", ROC area " << report.roc.area << std::endl;
    json summary = metrics_json(report);
    summary["per_attack"] = per_attack;
    summary["embedding_contrast"] = contrast;
    return out.finish(summary);
  });
}

json Pipeline::onion() {
  return run_stage("onion", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("poison") / "primary.jsonl");
    StageWriter out(config_.workdir, "onion");
    std::vector<std::vector<std::string>> corpus;
    for (const auto* s : primary.select(Label::clean, std::nullopt, Split::train))
      corpus.push_back(onion_tokens(*s));
    const NGramLM lm = train_ngram_lm(corpus, config_.onion_order, config_.onion_k);
    const NGramOracle ngram(lm);
    std::optional<FilePerplexityOracle> file;
    if (!config_.perplexity_file.empty()) file = FilePerplexityOracle::from_file(config_.perplexity_file);
    const PerplexityOracle& oracle = file ? static_cast<const PerplexityOracle&>(*file) : ngram;

    const double threshold = calibrate_threshold(
        primary.select(Label::clean, std::nullopt, Split::val), oracle, config_.onion_quantile);
    const auto test = primary.select(std::nullopt, std::nullopt, Split::test);
    std::vector<TriggerReport> reports(test.size());
    std::vector<std::string> errors(test.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < test.size(); ++i) {
      try {
        const auto tokens = onion_tokens(*test[i]);
        reports[i] = onion_detect(test[i]->id, tokens, oracle, threshold);
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    }
    for (const auto& e : errors)
      if (!e.empty()) throw Error(e);

    std::vector<int> pred, labels;
    for (std::size_t i = 0; i < test.size(); ++i) {
      pred.push_back(reports[i].verdict == Label::poisoned);
      labels.push_back(test[i]->label == Label::poisoned);
    }
    EvaluationReport report = compute_metrics(pred, labels);
    json per_attack = json::object();
    for (Attack a : kAllAttacks) {
      std::size_t n = 0, flagged = 0, trig = 0, trig_hit = 0, located = 0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        if (test[i]->attack != a) continue;
        ++n;
        flagged += reports[i].verdict == Label::poisoned;
        const std::set<std::size_t> fl(reports[i].flagged.begin(), reports[i].flagged.end());
        bool any = false;
        for (std::size_t k : trigger_token_indices(*test[i])) {
          ++trig;
          if (fl.count(k)) {
            ++trig_hit;
            any = true;
          }
        }
        located += any;
      }
      auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
      per_attack[std::string(to_string(a))] = {{"samples", n},
                                               {"sample_recall", ratio(flagged, n)},
                                               {"trigger_token_recall", ratio(trig_hit, trig)},
                                               {"trigger_located_rate", ratio(located, n)}};
    }
    std::size_t clean = 0, clean_flagged = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
      if (test[i]->label == Label::clean) {
        ++clean;
        clean_flagged += reports[i].verdict == Label::poisoned;
      }
    report.metadata = {{"oracle", file ? "file" : "ngram"},
                       {"threshold", threshold},
                       {"quantile", config_.onion_quantile},
                       {"clean_flag_rate", clean ? static_cast<double>(clean_flagged) / static_cast<double>(clean) : 0.0},
                       {"per_attack", per_attack}};
    out.write_json("report.json", to_json(report));
    std::cout << "[onion] threshold " << threshold << ", accuracy " << report.accuracy << std::endl;
    json summary = metrics_json(report);
    summary["threshold"] = threshold;
    summary["per_attack"] = per_attack;
    return out.finish(summary);
  });
}

json Pipeline::loao() {
  return run_stage("loao", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("poison") / "primary.jsonl");
    const DatasetManifest unseen = read_manifest(stage_dir("poison") / "unseen.jsonl");
    const FeatureTable table = load_table(stage_dir("embed") / "features.jsonl");
    StageWriter out(config_.workdir, "loao");
    json folds = json::object();
    for (Attack a : config_.loao_attacks) {
      const std::string name(to_string(a));
      std::cout << "[loao] excluding " << name << std::endl;
      const auto res = leave_one_attack_out(primary, unseen, a, table, table.layout,
                                            config_.detector, derive_seed(config_.seed, "loao"));
      json r = to_json(res.report);
      r["training"] = report_to_json(res.training);
      out.write_json(name + ".json", r);
      folds[name] = metrics_json(res.report);
      folds[name]["test_poisoned"] = res.report.metadata["test_poisoned"];
      folds[name]["excluded_in_training"] = res.report.metadata["excluded_in_training"];
      std::cout << "[loao] " << name << " accuracy " << res.report.accuracy << std::endl;
    }
    out.write_json("report.json", {{"folds", folds}, {"feature_config", table.layout.config}});
    return out.finish({{"folds", folds}});
  });
}

json Pipeline::ablate() {
  return run_stage("ablate", [&] {
    const DatasetManifest primary = read_manifest(stage_dir("poison") / "primary.jsonl");
    const Embedded emb = load_embedders(config_, stage_dir("embedders"));
    StageWriter out(config_.workdir, "ablate");
    auto samples = pointers(primary);
    emb.contextual.require(samples);
    // all_features holds every segment the single modes use.
    FeatureTable table;
    table.layout = feature_layout(FeatureMode::all_features, emb.view());
    for (auto& v : assemble_all(samples, emb.view(), FeatureMode::all_features))
      table.vectors[v.id] = std::move(v.values);
    std::map<FeatureMode, FeatureLayout> layouts;
    for (FeatureMode m : config_.ablation_modes) layouts[m] = feature_layout(m, emb.view());
    const auto rows = feature_ablation(primary, table, layouts, AblationSpec{config_.ablation_modes},
                                       config_.detector);
    json table_json = json::array();
    for (const auto& r : rows) {
      json row = metrics_json(r.report);
      row["mode"] = to_string(r.mode);
      row["feature_length"] = r.feature_length;
      table_json.push_back(row);
      std::cout << "[ablate] " << to_string(r.mode) << " accuracy " << r.report.accuracy << std::endl;
    }
    out.write_json("report.json", {{"rows", table_json}});
    out.write("ablation.csv", ablation_csv(rows));
    return out.finish({{"rows", table_json}});
  });
}

json Pipeline::full() {
  json stages = json::object();
  stages["ingest"] = ingest();
  stages["train-victim"] = train_victim();
  stages["train-embedders"] = train_embedders();
  stages["poison"] = poison();
  stages["embed"] = embed();
  stages["train-detector"] = train_detector();
  stages["evaluate"] = evaluate();
  return stages;
}

json Pipeline::detect(const fs::path& input) const {
  return run_stage("detect", [&] {
    std::string source = read_text_file(input);
    if (input.extension() == ".json" || input.extension() == ".jsonl") {
      auto j = json::parse(source.substr(0, source.find('\n') == std::string::npos ? source.size()
                                                                                    : source.find('\n')));
      source = j.at("source").get<std::string>();
    }
    parse_method(source);  // throws ParseError with position on bad input
    const CodeSample sample = make_clean_sample(source);
    const Embedded emb = load_embedders(config_, stage_dir("embedders"));
    const DetectorModel model = load_model(stage_dir("detector") / "model.ckpt");
    FeatureLayout stored;
    read_features(stage_dir("embed") / "features.jsonl", &stored);
    FeatureMode mode = config_.feature_mode;
    if (stored.config.rfind(std::string(to_string(mode)) + ":", 0) != 0)
      mode = parse_feature_mode(stored.config.substr(0, stored.config.rfind(':')));
    const FeatureVector fv = assemble_features(sample, emb.view(), mode);
    const auto [p_clean, p_poison] = predict(model, fv.values);
    return json{{"id", sample.id},
                {"p_clean", p_clean},
                {"p_poison", p_poison},
                {"verdict", p_poison >= 0.5 ? "poisoned" : "clean"}};
  });
}

}  // namespace codeshield
