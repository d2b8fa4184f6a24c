// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/contextual.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "codeshield/common.hpp"
#include "codeshield/java_source.hpp"
#include "codeshield/json_io.hpp"

namespace codeshield {

ContextualAdapter ContextualAdapter::stub(std::uint64_t seed) {
  ContextualAdapter a;
  a.source_ = Source::deterministic_stub;
  a.seed_ = seed;
  return a;
}

ContextualAdapter ContextualAdapter::from_file(const std::filesystem::path& path) {
  ContextualAdapter a;
  a.source_ = Source::external_file;
  for (const auto& rec : read_jsonl(path)) {
    auto values = rec.at("values").get<std::vector<float>>();
    if (values.size() != kContextualDim)
      throw Error("contextual vector for " + rec.at("id").get<std::string>() + " has " +
                  std::to_string(values.size()) + " values, expected 768");
    a.vectors_[rec.at("id").get<std::string>()] = std::move(values);
  }
  return a;
}

void ContextualAdapter::require(const std::vector<const CodeSample*>& samples) const {
  if (source_ != Source::external_file) return;
  std::vector<std::string> missing;
  for (const CodeSample* s : samples)
    if (!vectors_.count(s->id)) missing.push_back(s->id);
  if (missing.empty()) return;
  std::ostringstream msg;
  msg << "contextual file has no vector for " << missing.size() << " sample(s):";
  for (const auto& id : missing) msg << ' ' << id;
  throw Error(msg.str());
}

std::vector<float> ContextualAdapter::embed(const CodeSample& sample) const {
  if (source_ == Source::external_file) {
    auto it = vectors_.find(sample.id);
    if (it == vectors_.end()) throw Error("contextual file has no vector for sample " + sample.id);
    return it->second;
  }
  const TokenStream ts = tokenize(sample.source);
  std::unordered_map<std::string, double> counts;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::string gram;
    for (std::size_t n = 0; n < 3 && i + n < ts.size(); ++n) {
      if (n) gram += '\x1f';
      gram += ts.text(i + n);
      counts[gram] += 1;
    }
  }
  std::vector<double> acc(kContextualDim, 0.0);
  for (const auto& [gram, c] : counts) {
    std::uint64_t state = derive_seed(seed_, gram);
    for (std::size_t k = 0; k < kContextualDim; k += 64) {
      state = splitmix64(state);
      for (std::size_t b = 0; b < 64 && k + b < kContextualDim; ++b)
        acc[k + b] += ((state >> b) & 1) ? c : -c;
    }
  }
  double norm = 0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<float> out(kContextualDim, 0.f);
  if (norm > 0)
    for (std::size_t k = 0; k < kContextualDim; ++k) out[k] = static_cast<float>(acc[k] / norm);
  return out;
}

void write_contextual_file(const std::filesystem::path& path,
                           const std::map<std::string, std::vector<float>>& vectors) {
  std::ostringstream body;
  for (const auto& [id, values] : vectors)
    body << nlohmann::json{{"id", id}, {"values", values}}.dump() << '\n';
  write_text_file(path, body.str());
}

}  // namespace codeshield
