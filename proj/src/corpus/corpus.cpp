// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "codeshield/common.hpp"
#include "codeshield/java_source.hpp"
#include "codeshield/json_io.hpp"

namespace codeshield {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Label v) { return v == Label::clean ? "clean" : "poisoned"; }

std::string_view to_string(Attack v) {
  switch (v) {
    case Attack::none: return "none";
    case Attack::trigger_rename: return "trigger_rename";
    case Attack::dead_code: return "dead_code";
    case Attack::mhm: return "mhm";
    case Attack::codefooler: return "codefooler";
  }
  return "none";
}

std::string_view to_string(Split v) {
  switch (v) {
    case Split::unassigned: return "unassigned";
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unseen: return "unseen";
  }
  return "unassigned";
}

Label parse_label(std::string_view s) {
  if (s == "clean") return Label::clean;
  if (s == "poisoned") return Label::poisoned;
  throw Error("unknown label '" + std::string(s) + "'");
}

Attack parse_attack(std::string_view s) {
  for (Attack a : {Attack::none, Attack::trigger_rename, Attack::dead_code, Attack::mhm,
                   Attack::codefooler})
    if (to_string(a) == s) return a;
  throw Error("unknown attack '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  for (Split v : {Split::unassigned, Split::train, Split::val, Split::test, Split::unseen})
    if (to_string(v) == s) return v;
  throw Error("unknown split '" + std::string(s) + "'");
}

std::string sample_id(std::string_view source) {
  // Runs of whitespace collapse to one space; leading/trailing whitespace is dropped.
  std::string normalized;
  normalized.reserve(source.size());
  bool pending_space = false;
  for (unsigned char c : source) {
    if (std::isspace(c)) {
      pending_space = !normalized.empty();
      continue;
    }
    if (pending_space) normalized.push_back(' ');
    pending_space = false;
    normalized.push_back(static_cast<char>(c));
  }
  return to_hex(fnv1a64(normalized));
}

CodeSample make_clean_sample(std::string source) {
  CodeSample s;
  s.id = sample_id(source);
  s.source = std::move(source);
  return s;
}

std::size_t ManifestCounts::total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : cells) n += c;
  return n;
}

std::size_t ManifestCounts::count(std::optional<Label> label, std::optional<Attack> attack,
                                  std::optional<Split> split) const {
  std::size_t n = 0;
  for (const auto& [key, c] : cells) {
    const auto& [l, a, s] = key;
    if ((!label || *label == l) && (!attack || *attack == a) && (!split || *split == s)) n += c;
  }
  return n;
}

ManifestCounts DatasetManifest::counts() const {
  ManifestCounts c;
  for (const auto& e : entries) ++c.cells[{e.label, e.attack, e.split}];
  return c;
}

void DatasetManifest::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.id).second) throw Error("duplicate sample id " + e.id);
    if ((e.label == Label::clean) != (e.attack == Attack::none))
      throw Error("sample " + e.id + " has inconsistent label/attack tags");
  }
}

std::vector<const CodeSample*> DatasetManifest::select(std::optional<Label> label,
                                                       std::optional<Attack> attack,
                                                       std::optional<Split> split) const {
  std::vector<const CodeSample*> out;
  for (const auto& e : entries)
    if ((!label || *label == e.label) && (!attack || *attack == e.attack) &&
        (!split || *split == e.split))
      out.push_back(&e);
  return out;
}

std::vector<CodeSample> deduplicate(std::vector<CodeSample> samples) {
  std::unordered_set<std::string> seen;
  std::vector<CodeSample> out;
  out.reserve(samples.size());
  for (auto& s : samples)
    if (seen.insert(s.id).second) out.push_back(std::move(s));
  return out;
}

namespace {

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return ss.str();
}

bool parses(const std::string& source) {
  try {
    parse_method(source);
    return true;
  } catch (const ParseError&) {
    return false;
  }
}

}  // namespace

DatasetManifest ingest_corpus(const fs::path& root, std::size_t limit, IngestStats* stats) {
  IngestStats local;
  std::vector<CodeSample> raw;
  auto accept = [&](std::string source) {
    if (!parses(source)) {
      ++local.skipped;
      return;
    }
    raw.push_back(make_clean_sample(std::move(source)));
  };

  std::error_code ec;
  if (fs::is_directory(root, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root, ec))
      if (entry.is_regular_file() && entry.path().extension() == ".java")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ++local.files_read;
      auto text = read_file(f);
      if (!text) {
        ++local.skipped;
        continue;
      }
      accept(std::move(*text));
    }
  } else if (fs::is_regular_file(root, ec)) {
    std::ifstream in(root);
    if (!in) throw Error("cannot read corpus file " + root.string());
    ++local.files_read;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      try {
        auto rec = json::parse(line);
        accept(rec.at("source").get<std::string>());
      } catch (const json::exception&) {
        ++local.skipped;
      }
    }
  } else {
    throw Error("corpus path does not exist: " + root.string());
  }

  const std::size_t before = raw.size();
  auto unique = deduplicate(std::move(raw));
  local.duplicates = before - unique.size();
  if (limit > 0 && unique.size() > limit) unique.resize(limit);
  if (stats) *stats = local;
  if (local.skipped > 0)
    std::cerr << "warning: skipped " << local.skipped << " unreadable or unparsable inputs\n";
  if (unique.empty()) throw Error("empty corpus");

  DatasetManifest m;
  m.entries = std::move(unique);
  m.provenance = "ingested from " + root.string();
  return m;
}

DatasetManifest split_dataset(DatasetManifest manifest, SplitRatios ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
    throw ConfigError("split ratios must be non-negative and sum to 1 (got " +
                      std::to_string(sum) + ")");

  // Strata in enum order; inside a stratum, seeded-hash order.
  std::vector<std::size_t> order(manifest.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::uint64_t> keys(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    keys[i] = derive_seed(seed, manifest.entries[i].id);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = manifest.entries[a];
    const auto& eb = manifest.entries[b];
    return std::tie(ea.label, ea.attack, keys[a], ea.id) <
           std::tie(eb.label, eb.attack, keys[b], eb.id);
  });

  const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};
  const std::array<Split, 3> targets = {Split::train, Split::val, Split::test};
  std::array<double, 3> assigned = {0, 0, 0};
  double n = 0;
  for (std::size_t idx : order) {
    n += 1;
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t k = 0; k < 3; ++k) {
      const double deficit = r[k] * n - assigned[k];
      if (deficit > best_deficit + 1e-12) {
        best_deficit = deficit;
        best = k;
      }
    }
    assigned[best] += 1;
    manifest.entries[idx].split = targets[best];
  }
  manifest.seed = seed;
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ostringstream body;
  for (const auto& e : manifest.entries) body << sample_to_json(e).dump() << '\n';
  write_text_file(path, body.str());

  json meta;
  meta["seed"] = manifest.seed;
  meta["provenance"] = manifest.provenance;
  meta["entries"] = manifest.entries.size();
  json cells = json::array();
  for (const auto& [key, c] : manifest.counts().cells) {
    const auto& [l, a, s] = key;
    cells.push_back({{"label", to_string(l)}, {"attack", to_string(a)}, {"split", to_string(s)},
                     {"count", c}});
  }
  meta["counts"] = cells;
  write_text_file(fs::path(path.string() + ".meta.json"), meta.dump(2) + "\n");

  if (!manifest.origins.empty()) {
    std::ostringstream origins;
    for (const auto& [id, source] : manifest.origins)
      origins << json{{"id", id}, {"source", source}}.dump() << '\n';
    write_text_file(fs::path(path.string() + ".origins.jsonl"), origins.str());
  }
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read manifest " + path.string());
  DatasetManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      m.entries.push_back(sample_from_json(json::parse(line)));
    } catch (const json::exception& ex) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  const fs::path meta_path(path.string() + ".meta.json");
  if (fs::exists(meta_path)) {
    std::ifstream min(meta_path);
    const json meta = json::parse(min);
    m.seed = meta.value("seed", std::uint64_t{0});
    m.provenance = meta.value("provenance", std::string{});
  }
  const fs::path origins_path(path.string() + ".origins.jsonl");
  if (fs::exists(origins_path))
    for (const auto& rec : read_jsonl(origins_path))
      m.origins[rec.at("id").get<std::string>()] = rec.at("source").get<std::string>();
  m.validate();
  return m;
}

}  // namespace codeshield
