// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/features.hpp"

#include <sstream>

#include "codeshield/common.hpp"
#include "codeshield/json_io.hpp"
#include "codeshield/text.hpp"

namespace codeshield {

namespace {

constexpr std::size_t kTopNames = 10;

std::vector<float> embed_name(const SubwordHashEmbedder& emb, std::string_view name) {
  if (name == kNullClass) return std::vector<float>(emb.dimension(), 0.f);
  const auto parts = split_identifier(name);
  return emb.embed_text(std::span<const std::string>(parts));
}

void append(std::vector<float>& out, const std::vector<float>& v) {
  out.insert(out.end(), v.begin(), v.end());
}

}  // namespace

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::only_embeddings: return "only_embeddings";
    case FeatureMode::all_features: return "all_features";
    case FeatureMode::single_path: return "single:path";
    case FeatureMode::single_contextual: return "single:contextual";
    case FeatureMode::single_text: return "single:text";
  }
  return "only_embeddings";
}

FeatureMode parse_feature_mode(std::string_view text) {
  for (FeatureMode m : {FeatureMode::only_embeddings, FeatureMode::all_features,
                        FeatureMode::single_path, FeatureMode::single_contextual,
                        FeatureMode::single_text})
    if (to_string(m) == text) return m;
  throw ConfigError("unknown feature mode '" + std::string(text) + "'");
}

std::size_t FeatureLayout::size() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.length;
  return n;
}

std::size_t FeatureLayout::offset(std::string_view segment) const {
  std::size_t off = 0;
  for (const auto& s : segments) {
    if (s.name == segment) return off;
    off += s.length;
  }
  throw Error("layout has no segment '" + std::string(segment) + "'");
}

FeatureLayout feature_layout(FeatureMode mode, const Embedders& e) {
  const bool need_path = mode != FeatureMode::single_contextual;  // text uses the predicted name
  const bool need_text = mode != FeatureMode::single_path && mode != FeatureMode::single_contextual;
  const bool need_ctx = mode == FeatureMode::only_embeddings ||
                        mode == FeatureMode::all_features ||
                        mode == FeatureMode::single_contextual;
  if (need_path && !e.paths)
    throw Error("feature mode " + std::string(to_string(mode)) + " needs the path embedder");
  if (need_text && !e.subword)
    throw Error("feature mode " + std::string(to_string(mode)) + " needs the subword embedder");
  if (need_ctx && !e.contextual)
    throw Error("feature mode " + std::string(to_string(mode)) + " needs the contextual adapter");

  FeatureLayout l;
  auto seg = [&](std::string name, std::size_t len) { l.segments.push_back({std::move(name), len}); };
  switch (mode) {
    case FeatureMode::only_embeddings:
    case FeatureMode::all_features:
      seg("path_code", e.paths->code_dim());
      seg("contextual", kContextualDim);
      seg("name_text", e.subword->dimension());
      seg("snippet_text", e.subword->dimension());
      if (mode == FeatureMode::all_features) {
        seg("top10_names", kTopNames * e.subword->dimension());
        seg("top10_scores", kTopNames);
      }
      break;
    case FeatureMode::single_path:
      seg("path_code", e.paths->code_dim());
      break;
    case FeatureMode::single_contextual:
      seg("contextual", kContextualDim);
      break;
    case FeatureMode::single_text:
      seg("name_text", e.subword->dimension());
      seg("snippet_text", e.subword->dimension());
      break;
  }
  l.config = std::string(to_string(mode)) + ":";
  for (std::size_t i = 0; i < l.segments.size(); ++i)
    l.config += (i ? "+" : "") + std::to_string(l.segments[i].length);
  return l;
}

FeatureVector assemble_features(const CodeSample& sample, const Embedders& e, FeatureMode mode) {
  const FeatureLayout layout = feature_layout(mode, e);
  const ParsedMethod pm = parse_method(sample.source);
  FeatureVector fv;
  fv.id = sample.id;
  fv.values.reserve(layout.size());

  std::vector<PathContext> contexts;
  PathContextEmbedder::Output path_out;
  if (e.paths && mode != FeatureMode::single_contextual) {
    contexts = extract_ast_paths(pm, e.paths->config().max_paths, e.paths->config().max_length);
    path_out = e.paths->forward(contexts);
  }
  auto top = [&] { return e.paths->top_predictions(contexts, kTopNames); };

  for (const auto& seg : layout.segments) {
    if (seg.name == "path_code") {
      append(fv.values, path_out.code);
    } else if (seg.name == "contextual") {
      append(fv.values, e.contextual->embed(sample));
    } else if (seg.name == "name_text") {
      append(fv.values, embed_name(*e.subword, top().front().first));
    } else if (seg.name == "snippet_text") {
      const auto tokens = preprocess_tokens(pm.tokens);
      append(fv.values, e.subword->embed_text(std::span<const std::string>(tokens)));
    } else if (seg.name == "top10_names") {
      for (const auto& [name, _] : top()) append(fv.values, embed_name(*e.subword, name));
    } else if (seg.name == "top10_scores") {
      for (const auto& [_, score] : top()) fv.values.push_back(static_cast<float>(score));
    }
  }
  if (fv.values.size() != layout.size())
    throw Error("assembled " + std::to_string(fv.values.size()) + " values for layout " +
                layout.config);
  return fv;
}

std::vector<FeatureVector> assemble_all(const std::vector<const CodeSample*>& samples,
                                        const Embedders& embedders, FeatureMode mode) {
  feature_layout(mode, embedders);  // fail before spawning work
  std::vector<FeatureVector> out(samples.size());
  std::vector<std::string> errors(samples.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      out[i] = assemble_features(*samples[i], embedders, mode);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!errors[i].empty()) throw Error("sample " + samples[i]->id + ": " + errors[i]);
  return out;
}

std::vector<FeatureVector> select_segments(const std::vector<FeatureVector>& vectors,
                                           const FeatureLayout& from, const FeatureLayout& to) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (const auto& seg : to.segments) {
    const std::size_t off = from.offset(seg.name);
    for (const auto& s : from.segments)
      if (s.name == seg.name && s.length != seg.length)
        throw Error("segment " + seg.name + " has a different length in the source layout");
    spans.emplace_back(off, seg.length);
  }
  std::vector<FeatureVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    FeatureVector f{v.id, {}};
    f.values.reserve(to.size());
    for (const auto& [off, len] : spans)
      f.values.insert(f.values.end(), v.values.begin() + off, v.values.begin() + off + len);
    out.push_back(std::move(f));
  }
  return out;
}

void write_features(const std::filesystem::path& path, const FeatureLayout& layout,
                    const std::vector<FeatureVector>& vectors) {
  std::ostringstream body;
  for (const auto& v : vectors) {
    if (v.values.size() != layout.size())
      throw Error("feature vector " + v.id + " does not match layout " + layout.config);
    body << nlohmann::json{{"id", v.id}, {"config", layout.config}, {"values", v.values}}.dump()
         << '\n';
  }
  write_text_file(path, body.str());
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : layout.segments) segs.push_back({{"name", s.name}, {"length", s.length}});
  write_text_file(std::filesystem::path(path.string() + ".layout.json"),
                  nlohmann::json{{"config", layout.config}, {"segments", segs}}.dump(2) + "\n");
}

std::vector<FeatureVector> read_features(const std::filesystem::path& path,
                                         FeatureLayout* layout) {
  if (layout) {
    const auto j =
        nlohmann::json::parse(read_text_file(std::filesystem::path(path.string() + ".layout.json")));
    layout->config = j.at("config").get<std::string>();
    layout->segments.clear();
    for (const auto& s : j.at("segments"))
      layout->segments.push_back({s.at("name").get<std::string>(), s.at("length").get<std::size_t>()});
  }
  std::vector<FeatureVector> out;
  for (const auto& rec : read_jsonl(path))
    out.push_back({rec.at("id").get<std::string>(), rec.at("values").get<std::vector<float>>()});
  return out;
}

}  // namespace codeshield
