// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>
#include <sstream>

#include "codeshield/json_io.hpp"
#include "codeshield/pipeline.hpp"

namespace codeshield {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kSyntheticPrefix = "synthetic:";

json subword_json(const SubwordConfig& c) {
  return {{"dimension", c.dimension},   {"min_n", c.min_n},         {"max_n", c.max_n},
          {"bucket_count", c.bucket_count}, {"window", c.window},   {"epochs", c.epochs},
          {"negatives", c.negatives},   {"learning_rate", c.learning_rate}};
}

json paths_json(const PathEmbedderConfig& c) {
  return {{"embedding_dim", c.embedding_dim}, {"code_dim", c.code_dim},
          {"max_paths", c.max_paths},         {"max_length", c.max_length},
          {"epochs", c.epochs},               {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}};
}

// Unknown keys and leaf type mismatches against the defaults.
void check_shape(const json& user, const json& defaults, const std::string& prefix,
                 std::vector<std::string>& diags) {
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) {
      diags.push_back("unknown key '" + path + "'");
      continue;
    }
    const json& d = defaults.at(key);
    if (d.is_object()) {
      if (!value.is_object())
        diags.push_back(path + ": expected an object");
      else
        check_shape(value, d, path, diags);
    } else if (d.is_number_unsigned()) {
      if (!value.is_number_unsigned()) diags.push_back(path + ": expected a non-negative integer");
    } else if (d.is_number()) {
      if (!value.is_number()) diags.push_back(path + ": expected a number");
    } else if (d.is_string()) {
      if (!value.is_string()) diags.push_back(path + ": expected a string");
    } else if (d.is_array()) {
      if (!value.is_array()) diags.push_back(path + ": expected an array");
    } else if (d.is_boolean()) {
      if (!value.is_boolean()) diags.push_back(path + ": expected true or false");
    }
  }
}

bool creatable(const fs::path& p) {
  std::error_code ec;
  fs::path cur = fs::absolute(p, ec);
  if (ec) return false;
  while (!cur.empty()) {
    if (fs::exists(cur, ec)) return fs::is_directory(cur, ec);
    if (cur == cur.parent_path()) break;
    cur = cur.parent_path();
  }
  return false;
}

double sum_of(const json& obj) {
  double s = 0;
  for (const auto& [_, v] : obj.items()) s += v.get<double>();
  return s;
}

}  // namespace

json default_config_json() {
  json d;
  d["paths"] = {{"corpus", ""}, {"workdir", ""}, {"contextual_file", ""}, {"perplexity_file", ""}};
  d["seed"] = std::uint64_t{1};
  d["corpus"] = {{"limit", std::size_t{0}},
                 {"unseen_fraction", 0.2},
                 {"split", {{"train", 0.8}, {"val", 0.1}, {"test", 0.1}}}};
  json mix = json::object();
  for (Attack a : kAllAttacks) mix[std::string(to_string(a))] = 0.25;
  d["poison"] = {{"fraction", 0.5},
                 {"mix", mix},
                 {"max_iterations", std::size_t{100}},
                 {"candidate_pool_size", std::size_t{10}}};
  d["victim"] = {{"classes", std::size_t{12}}};
  d["embedders"] = {{"feature_mode", "only_embeddings"},
                    {"subword", subword_json(SubwordConfig{})},
                    {"paths", paths_json(PathEmbedderConfig{})}};
  json det = DetectorConfig{};
  det.erase("seed");  // derived from the run seed
  d["detector"] = det;
  d["onion"] = {{"order", std::size_t{3}}, {"k", 0.1}, {"quantile", 0.95}};
  json modes = json::array();
  for (FeatureMode m : {FeatureMode::all_features, FeatureMode::only_embeddings,
                        FeatureMode::single_contextual, FeatureMode::single_path,
                        FeatureMode::single_text})
    modes.push_back(std::string(to_string(m)));
  json attacks = json::array();
  for (Attack a : kAllAttacks) attacks.push_back(std::string(to_string(a)));
  d["eval"] = {{"histogram_bins", std::size_t{10}},
               {"saliency_samples", std::size_t{20}},
               {"ablation_modes", modes},
               {"loao_attacks", attacks}};
  return d;
}

void apply_overrides(json& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq), text = o.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    json* node = &config;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
      if (!node->is_object()) throw ConfigError("override key '" + key + "' crosses a non-object");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      if (node->is_null()) *node = json::object();
      start = dot + 1;
    }
  }
}

std::vector<std::string> validate_config_json(const json& user) {
  std::vector<std::string> diags;
  if (!user.is_object()) return {"configuration must be a JSON object"};
  const json defaults = default_config_json();
  check_shape(user, defaults, "", diags);
  json merged = defaults;
  merged.merge_patch(user);
  // Semantic checks only run on keys whose shape (and whose parents' shape) is sound.
  std::vector<std::string> bad;
  for (const auto& d : diags) {
    if (d.rfind("unknown key '", 0) == 0)
      bad.push_back(d.substr(13, d.size() - 14));
    else
      bad.push_back(d.substr(0, d.find(':')));
  }
  auto ok_type = [&](const std::string& path) {
    for (const auto& b : bad)
      if (b == path || b.rfind(path + ".", 0) == 0 || path.rfind(b + ".", 0) == 0) return false;
    return true;
  };
  auto num = [&](const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); };

  // paths
  const json& p = merged["paths"];
  if (ok_type("paths.corpus")) {
    const std::string corpus = p["corpus"].get<std::string>();
    if (corpus.empty()) {
      diags.push_back("paths.corpus: required");
    } else if (corpus.rfind(kSyntheticPrefix, 0) == 0) {
      const std::string n = corpus.substr(kSyntheticPrefix.size());
      if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos || std::stoull(n) == 0)
        diags.push_back("paths.corpus: synthetic corpus size must be a positive integer");
    } else if (!fs::exists(corpus)) {
      diags.push_back("paths.corpus: '" + corpus + "' does not exist");
    }
  }
  if (ok_type("paths.workdir")) {
    const std::string w = p["workdir"].get<std::string>();
    if (w.empty())
      diags.push_back("paths.workdir: required");
    else if (!creatable(w))
      diags.push_back("paths.workdir: '" + w + "' cannot be created");
  }
  for (const char* key : {"contextual_file", "perplexity_file"}) {
    const std::string path = std::string("paths.") + key;
    if (!ok_type(path)) continue;
    const std::string f = p[key].get<std::string>();
    if (!f.empty() && !fs::is_regular_file(f))
      diags.push_back(path + ": '" + f + "' does not exist");
  }

  // corpus
  const json& c = merged["corpus"];
  if (ok_type("corpus.unseen_fraction")) {
    const double u = num(c["unseen_fraction"]);
    if (!(u >= 0 && u < 1)) diags.push_back("corpus.unseen_fraction: must be in [0, 1)");
  }
  if (ok_type("corpus.split")) {
    bool good = true;
    for (const auto& [k, v] : c["split"].items())
      if (!(num(v) >= 0 && num(v) <= 1)) {
        diags.push_back("corpus.split." + k + ": must be in [0, 1]");
        good = false;
      }
    const double s = sum_of(c["split"]);
    if (good && std::abs(s - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "corpus.split: ratios sum to " << s << ", expected 1";
      diags.push_back(os.str());
    }
  }

  // poison
  const json& po = merged["poison"];
  if (ok_type("poison.fraction")) {
    const double f = num(po["fraction"]);
    if (!(f > 0 && f < 1)) diags.push_back("poison.fraction: must be in (0, 1)");
  }
  if (ok_type("poison.mix")) {
    bool good = true;
    for (const auto& [k, v] : po["mix"].items())
      if (!(num(v) >= 0)) {
        diags.push_back("poison.mix." + k + ": must be >= 0");
        good = false;
      }
    const double s = sum_of(po["mix"]);
    if (good && std::abs(s - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "poison.mix: shares sum to " << s << ", expected 1";
      diags.push_back(os.str());
    }
  }
  for (const char* key : {"max_iterations", "candidate_pool_size"})
    if (ok_type(std::string("poison.") + key) && po[key].get<std::size_t>() == 0)
      diags.push_back(std::string("poison.") + key + ": must be >= 1");
  if (ok_type("victim.classes") && merged["victim"]["classes"].get<std::size_t>() < 2)
    diags.push_back("victim.classes: must be >= 2");

  // embedders
  const json& e = merged["embedders"];
  if (ok_type("embedders.feature_mode")) {
    try {
      parse_feature_mode(e["feature_mode"].get<std::string>());
    } catch (const ConfigError& ex) {
      diags.push_back(std::string("embedders.feature_mode: ") + ex.what());
    }
  }
  if (ok_type("embedders.subword")) {
    const json& s = e["subword"];
    for (const char* key : {"dimension", "min_n", "max_n", "bucket_count", "window", "epochs",
                            "negatives"})
      if (s[key].get<std::size_t>() == 0)
        diags.push_back(std::string("embedders.subword.") + key + ": must be >= 1");
    if (s["min_n"].get<std::size_t>() > s["max_n"].get<std::size_t>())
      diags.push_back("embedders.subword.min_n: must not exceed max_n");
    if (!(num(s["learning_rate"]) > 0))
      diags.push_back("embedders.subword.learning_rate: must be > 0");
  }
  if (ok_type("embedders.paths")) {
    const json& s = e["paths"];
    for (const char* key : {"embedding_dim", "code_dim", "max_paths", "max_length", "epochs",
                            "batch_size"})
      if (s[key].get<std::size_t>() == 0)
        diags.push_back(std::string("embedders.paths.") + key + ": must be >= 1");
    if (!(num(s["learning_rate"]) > 0))
      diags.push_back("embedders.paths.learning_rate: must be > 0");
  }

  // detector
  if (ok_type("detector")) {
    try {
      merged["detector"].get<DetectorConfig>().validate();
    } catch (const std::exception& ex) {
      diags.push_back(std::string("detector: ") + ex.what());
    }
  }

  // onion
  const json& on = merged["onion"];
  if (ok_type("onion.order") && on["order"].get<std::size_t>() == 0)
    diags.push_back("onion.order: must be >= 1");
  if (ok_type("onion.k") && !(num(on["k"]) > 0)) diags.push_back("onion.k: must be > 0");
  if (ok_type("onion.quantile") && !(num(on["quantile"]) >= 0 && num(on["quantile"]) <= 1))
    diags.push_back("onion.quantile: must be in [0, 1]");

  // eval
  const json& ev = merged["eval"];
  if (ok_type("eval.histogram_bins") && ev["histogram_bins"].get<std::size_t>() == 0)
    diags.push_back("eval.histogram_bins: must be >= 1");
  if (ok_type("eval.ablation_modes")) {
    std::set<std::string> seen;
    for (const auto& m : ev["ablation_modes"]) {
      if (!m.is_string()) {
        diags.push_back("eval.ablation_modes: entries must be strings");
        continue;
      }
      try {
        parse_feature_mode(m.get<std::string>());
      } catch (const ConfigError& ex) {
        diags.push_back(std::string("eval.ablation_modes: ") + ex.what());
      }
      if (!seen.insert(m.get<std::string>()).second)
        diags.push_back("eval.ablation_modes: '" + m.get<std::string>() + "' listed twice");
    }
  }
  if (ok_type("eval.loao_attacks")) {
    for (const auto& a : ev["loao_attacks"]) {
      bool good = a.is_string();
      if (good) {
        try {
          good = parse_attack(a.get<std::string>()) != Attack::none;
        } catch (const std::exception&) {
          good = false;
        }
      }
      if (!good) diags.push_back("eval.loao_attacks: '" + a.dump() + "' is not an attack");
    }
  }
  return diags;
}

std::vector<std::string> validate_config(const fs::path& path,
                                         const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const std::exception& ex) {
    return {"cannot read configuration " + path.string() + ": " + ex.what()};
  }
  try {
    apply_overrides(j, overrides);
  } catch (const ConfigError& ex) {
    return {ex.what()};
  }
  return validate_config_json(j);
}

RunConfig parse_run_config(const json& user) {
  const auto diags = validate_config_json(user);
  if (!diags.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& d : diags) msg += "\n  " + d;
    throw ConfigError(msg);
  }
  json m = default_config_json();
  m.merge_patch(user);
  RunConfig r;
  r.corpus = m["paths"]["corpus"].get<std::string>();
  r.workdir = m["paths"]["workdir"].get<std::string>();
  r.contextual_file = m["paths"]["contextual_file"].get<std::string>();
  r.perplexity_file = m["paths"]["perplexity_file"].get<std::string>();
  r.seed = m["seed"].get<std::uint64_t>();
  r.corpus_limit = m["corpus"]["limit"].get<std::size_t>();
  r.unseen_fraction = m["corpus"]["unseen_fraction"].get<double>();
  r.split = {m["corpus"]["split"]["train"].get<double>(), m["corpus"]["split"]["val"].get<double>(),
             m["corpus"]["split"]["test"].get<double>()};
  r.poison_fraction = m["poison"]["fraction"].get<double>();
  for (const auto& [k, v] : m["poison"]["mix"].items()) r.attack_mix[parse_attack(k)] = v.get<double>();
  r.max_iterations = m["poison"]["max_iterations"].get<std::size_t>();
  r.candidate_pool_size = m["poison"]["candidate_pool_size"].get<std::size_t>();
  r.victim_classes = m["victim"]["classes"].get<std::size_t>();

  const json& s = m["embedders"]["subword"];
  r.subword.dimension = s["dimension"].get<std::size_t>();
  r.subword.min_n = s["min_n"].get<std::size_t>();
  r.subword.max_n = s["max_n"].get<std::size_t>();
  r.subword.bucket_count = s["bucket_count"].get<std::size_t>();
  r.subword.window = s["window"].get<std::size_t>();
  r.subword.epochs = s["epochs"].get<std::size_t>();
  r.subword.negatives = s["negatives"].get<std::size_t>();
  r.subword.learning_rate = s["learning_rate"].get<double>();
  r.subword.seed = derive_seed(r.seed, "subword");
  const json& pa = m["embedders"]["paths"];
  r.paths.embedding_dim = pa["embedding_dim"].get<std::size_t>();
  r.paths.code_dim = pa["code_dim"].get<std::size_t>();
  r.paths.max_paths = pa["max_paths"].get<std::size_t>();
  r.paths.max_length = pa["max_length"].get<std::size_t>();
  r.paths.epochs = pa["epochs"].get<std::size_t>();
  r.paths.batch_size = pa["batch_size"].get<std::size_t>();
  r.paths.learning_rate = pa["learning_rate"].get<double>();
  r.paths.seed = derive_seed(r.seed, "paths");
  r.feature_mode = parse_feature_mode(m["embedders"]["feature_mode"].get<std::string>());

  r.detector = m["detector"].get<DetectorConfig>();
  r.detector.seed = derive_seed(r.seed, "detector");

  r.onion_order = m["onion"]["order"].get<std::size_t>();
  r.onion_k = m["onion"]["k"].get<double>();
  r.onion_quantile = m["onion"]["quantile"].get<double>();

  r.histogram_bins = m["eval"]["histogram_bins"].get<std::size_t>();
  r.saliency_samples = m["eval"]["saliency_samples"].get<std::size_t>();
  for (const auto& v : m["eval"]["ablation_modes"])
    r.ablation_modes.push_back(parse_feature_mode(v.get<std::string>()));
  for (const auto& v : m["eval"]["loao_attacks"])
    r.loao_attacks.push_back(parse_attack(v.get<std::string>()));
  return r;
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const std::exception& ex) {
    throw ConfigError("cannot read configuration " + path.string() + ": " + ex.what());
  }
  apply_overrides(j, overrides);
  return parse_run_config(j);
}

}  // namespace codeshield
