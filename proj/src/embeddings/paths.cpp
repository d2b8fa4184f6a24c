// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/paths.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "codeshield/attacks.hpp"
#include "codeshield/common.hpp"
#include "codeshield/json_io.hpp"

namespace codeshield {

namespace {

constexpr std::string_view kFormat = "codeshield.paths";
constexpr int kVersion = 1;
constexpr std::string_view kUnknown = "<unk>";

class TreeBuilder {
 public:
  explicit TreeBuilder(const ParsedMethod& pm) : pm_(pm), ts_(pm.tokens) {
    match_.assign(ts_.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < ts_.size(); ++i) {
      if (ts_[i].kind != TokenKind::punctuation) continue;
      const auto t = ts_.text(i);
      if (t == "(" || t == "[" || t == "{") {
        stack.push_back(i);
      } else if ((t == ")" || t == "]" || t == "}") && !stack.empty()) {
        match_[stack.back()] = i;
        match_[i] = stack.back();
        stack.pop_back();
      }
    }
  }

  SyntaxTree run() {
    tree_.nodes.push_back({"Body", -1, 0, {}, {}});
    block(pm_.body_open + 1, pm_.body_close, 0);
    return std::move(tree_);
  }

 private:
  int add(std::string label, int parent, std::string terminal = {}) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(
        {std::move(label), parent, tree_.nodes[parent].depth + 1, {}, std::move(terminal)});
    tree_.nodes[parent].children.push_back(id);
    return id;
  }

  bool is_control(std::size_t i) const {
    static const std::set<std::string_view> words = {"if",  "for",   "while",   "do",
                                                     "try", "switch", "synchronized", "else"};
    return ts_[i].kind == TokenKind::keyword && words.count(ts_.text(i));
  }

  bool continues(std::size_t next, std::size_t end) const {
    return next < end && (ts_.is(next, "else") || ts_.is(next, "catch") ||
                          ts_.is(next, "finally") || ts_.is(next, "while"));
  }

  std::size_t statement_end(std::size_t i, std::size_t end) const {
    if (ts_.is(i, "{")) return match_[i] + 1;
    const bool control = is_control(i);
    for (std::size_t j = i; j < end; ++j) {
      if (ts_.is(j, "(") || ts_.is(j, "[")) {
        j = match_[j];
      } else if (ts_.is(j, "{")) {
        j = match_[j];
        if (control && !continues(j + 1, end)) return j + 1;
      } else if (ts_.is(j, ";")) {
        if (!(control && j + 1 < end && ts_.is(j + 1, "else"))) return j + 1;
      }
    }
    return end;
  }

  bool is_declaration(std::size_t i, std::size_t end) const {
    std::size_t j = i;
    if (ts_.is(j, "final")) return true;
    const bool typeish = (ts_[j].kind == TokenKind::identifier && !ts_.is_member_access(j)) ||
                         is_primitive_type(ts_.text(j));
    if (!typeish) return false;
    ++j;
    if (j < end && ts_.is(j, "<")) {
      int depth = 0;
      for (; j < end; ++j) {
        if (ts_.is(j, "<")) ++depth;
        if (ts_.is(j, ">")) --depth;
        if (ts_.is(j, ">>")) depth -= 2;
        if (depth <= 0) break;
      }
      ++j;
    }
    while (j + 1 < end && ts_.is(j, "[") && ts_.is(j + 1, "]")) j += 2;
    return j < end && ts_[j].kind == TokenKind::identifier;
  }

  std::string statement_label(std::size_t i, std::size_t end) const {
    if (ts_.is(i, "{")) return "Block";
    if (ts_[i].kind == TokenKind::keyword) {
      const auto t = ts_.text(i);
      static const std::set<std::string_view> named = {
          "if",  "for",    "while", "do",       "try",         "switch",
          "return", "throw", "break", "continue", "synchronized"};
      if (named.count(t)) {
        std::string label(t);
        label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
        return label;
      }
    }
    return is_declaration(i, end) ? "Decl" : "Expr";
  }

  void block(std::size_t begin, std::size_t end, int parent) {
    std::size_t i = begin;
    while (i < end) {
      if (ts_.is(i, ";")) {
        ++i;
        continue;
      }
      const std::size_t stop = std::max(statement_end(i, end), i + 1);
      const int node = add(statement_label(i, stop), parent);
      group(i, stop, node);
      i = stop;
    }
  }

  void leaf(std::size_t j, int parent) {
    const auto t = ts_.text(j);
    if (ts_[j].kind == TokenKind::literal) {
      if (t.front() == '"') add("Str", parent, "<str>");
      else if (t.front() == '\'') add("Chr", parent, "<chr>");
      else if (t == "true" || t == "false") add("Bool", parent, std::string(t));
      else if (t == "null") add("Null", parent, "null");
      else add("Num", parent, std::string(t));
      return;
    }
    const bool call = j + 1 < ts_.size() && ts_.is(j + 1, "(");
    std::string label;
    if (ts_.is_member_access(j)) {
      label = call ? "Invoke" : "Field";
    } else if (call) {
      label = "Call";
    } else if ((j > 0 && ts_.is(j - 1, "new")) ||
               (j + 1 < ts_.size() && (ts_[j + 1].kind == TokenKind::identifier ||
                                       ts_.is(j + 1, "<")))) {
      label = "Type";
    } else {
      label = "Name";
    }
    std::string terminal(t);
    if (!ts_.is_member_access(j) && t == pm_.identifiers.method_name) terminal = "<self>";
    add(std::move(label), parent, std::move(terminal));
  }

  void group(std::size_t begin, std::size_t end, int parent) {
    for (std::size_t j = begin; j < end; ++j) {
      const Token& tok = ts_[j];
      if (ts_.is(j, "(") || ts_.is(j, "[")) {
        const int node = add(ts_.is(j, "(") ? "Paren" : "Index", parent);
        group(j + 1, match_[j], node);
        j = match_[j];
      } else if (ts_.is(j, "{")) {
        const int node = add("Block", parent);
        block(j + 1, match_[j], node);
        j = match_[j];
      } else if (tok.kind == TokenKind::identifier || tok.kind == TokenKind::literal) {
        leaf(j, parent);
      }
    }
  }

  const ParsedMethod& pm_;
  const TokenStream& ts_;
  std::vector<std::size_t> match_;
  SyntaxTree tree_;
};

}  // namespace

std::string SyntaxTree::path(int a, int b, std::size_t* length) const {
  std::vector<int> up, down;
  int x = a, y = b;
  while (nodes[x].depth > nodes[y].depth) {
    up.push_back(x);
    x = nodes[x].parent;
  }
  while (nodes[y].depth > nodes[x].depth) {
    down.push_back(y);
    y = nodes[y].parent;
  }
  while (x != y) {
    up.push_back(x);
    down.push_back(y);
    x = nodes[x].parent;
    y = nodes[y].parent;
  }
  std::string out;
  for (int n : up) out += nodes[n].label + "^";
  out += nodes[x].label;
  for (auto it = down.rbegin(); it != down.rend(); ++it) out += "_" + nodes[*it].label;
  if (length) *length = up.size() + down.size() + 1;
  return out;
}

SyntaxTree build_syntax_tree(const ParsedMethod& method) {
  SyntaxTree tree = TreeBuilder(method).run();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i)
    if (tree.nodes[i].children.empty() && !tree.nodes[i].terminal.empty())
      tree.leaves.push_back(static_cast<int>(i));
  return tree;
}

std::vector<PathContext> extract_ast_paths(const ParsedMethod& method, std::size_t max_paths,
                                           std::size_t max_length) {
  if (max_paths == 0) return {};
  const SyntaxTree tree = build_syntax_tree(method);
  std::vector<PathContext> out;
  for (std::size_t i = 0; i < tree.leaves.size(); ++i)
    for (std::size_t j = i + 1; j < tree.leaves.size(); ++j) {
      std::size_t len = 0;
      std::string p = tree.path(tree.leaves[i], tree.leaves[j], &len);
      if (len > max_length) continue;
      out.push_back({tree.nodes[tree.leaves[i]].terminal, std::move(p),
                     tree.nodes[tree.leaves[j]].terminal});
    }
  std::sort(out.begin(), out.end());
  if (out.size() > max_paths) out.resize(max_paths);
  return out;
}

std::vector<PathContext> extract_ast_paths(const CodeSample& sample, std::size_t max_paths,
                                           std::size_t max_length) {
  return extract_ast_paths(parse_method(sample.source), max_paths, max_length);
}

// ------------------------------------------------------------------ model

namespace {

// Gradient of one sample. Embedding rows are sparse.
struct SampleGrad {
  std::vector<float> w, att, ow, ob;
  std::vector<std::pair<std::size_t, std::vector<float>>> te, pe;
  double loss = 0;
  bool correct = false;
};

struct Forward {
  std::vector<std::size_t> uniq;             // unique terminal indices
  std::vector<std::size_t> left_slot, right_slot;
  std::vector<float> lproj, rproj;           // uniq x D
  std::vector<float> c;                      // n x D (tanh activations)
  std::vector<double> alpha;
  std::vector<float> v;
  std::vector<double> probs;
};

}  // namespace

PathContextEmbedder::Indexed PathContextEmbedder::index(
    std::span<const PathContext> contexts) const {
  Indexed ix;
  auto lookup = [](const auto& map, const std::string& key) -> std::size_t {
    auto it = map.find(key);
    return it == map.end() ? 0 : it->second;
  };
  for (const auto& c : contexts) {
    ix.left.push_back(lookup(terminal_index_, c.left));
    ix.path.push_back(lookup(path_index_, c.path));
    ix.right.push_back(lookup(terminal_index_, c.right));
  }
  return ix;
}

namespace {

Forward run_forward(const PathEmbedderConfig& cfg, std::size_t num_classes, const float* te,
                    const float* pe, const float* w, const float* att, const float* ow,
                    const float* ob, const std::vector<std::size_t>& left,
                    const std::vector<std::size_t>& path, const std::vector<std::size_t>& right) {
  const std::size_t E = cfg.embedding_dim, D = cfg.code_dim, n = path.size();
  const std::size_t W3 = 3 * E;
  Forward f;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t : {left[i], right[i]})
      if (slot.emplace(t, f.uniq.size()).second) f.uniq.push_back(t);
    f.left_slot.push_back(slot[left[i]]);
    f.right_slot.push_back(slot[right[i]]);
  }
  const std::size_t u = f.uniq.size();
  f.lproj.assign(u * D, 0.f);
  f.rproj.assign(u * D, 0.f);
  for (std::size_t s = 0; s < u; ++s) {
    const float* e = te + f.uniq[s] * E;
    for (std::size_t d = 0; d < D; ++d) {
      const float* wl = w + d * W3;
      const float* wr = wl + 2 * E;
      float accl = 0.f, accr = 0.f;
      for (std::size_t k = 0; k < E; ++k) {
        accl += wl[k] * e[k];
        accr += wr[k] * e[k];
      }
      f.lproj[s * D + d] = accl;
      f.rproj[s * D + d] = accr;
    }
  }
  f.c.assign(n * D, 0.f);
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* e = pe + path[i] * E;
    float* ci = &f.c[i * D];
    double sc = 0;
    for (std::size_t d = 0; d < D; ++d) {
      const float* wp = w + d * W3 + E;
      float acc = 0.f;
      for (std::size_t k = 0; k < E; ++k) acc += wp[k] * e[k];
      ci[d] = std::tanh(acc + f.lproj[f.left_slot[i] * D + d] + f.rproj[f.right_slot[i] * D + d]);
      sc += static_cast<double>(att[d]) * ci[d];
    }
    score[i] = sc;
  }
  f.alpha.assign(n, 0.0);
  if (n > 0) {
    const double mx = *std::max_element(score.begin(), score.end());
    double z = 0;
    for (std::size_t i = 0; i < n; ++i) z += (f.alpha[i] = std::exp(score[i] - mx));
    for (auto& a : f.alpha) a /= z;
  }
  f.v.assign(D, 0.f);
  for (std::size_t d = 0; d < D; ++d) {
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += f.alpha[i] * f.c[i * D + d];
    f.v[d] = static_cast<float>(acc);
  }
  f.probs.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double acc = ob[c];
    for (std::size_t d = 0; d < D; ++d) acc += static_cast<double>(ow[c * D + d]) * f.v[d];
    f.probs[c] = acc;
  }
  const double mx = *std::max_element(f.probs.begin(), f.probs.end());
  double z = 0;
  for (auto& p : f.probs) z += (p = std::exp(p - mx));
  for (auto& p : f.probs) p /= z;
  return f;
}

}  // namespace

PathContextEmbedder::Output PathContextEmbedder::forward(
    std::span<const PathContext> contexts) const {
  const Indexed ix = index(contexts);
  Forward f = run_forward(config_, classes_.size(), terminal_emb_.data(), path_emb_.data(),
                          w_.data(), attention_.data(), out_w_.data(), out_b_.data(), ix.left,
                          ix.path, ix.right);
  return {std::move(f.v), std::move(f.alpha), std::move(f.probs)};
}

std::vector<float> PathContextEmbedder::code_vector(const ParsedMethod& method) const {
  const auto ctx = extract_ast_paths(method, config_.max_paths, config_.max_length);
  return forward(ctx).code;
}

std::vector<std::pair<std::string, double>> PathContextEmbedder::top_predictions(
    std::span<const PathContext> contexts, std::size_t k) const {
  const auto out = forward(contexts);
  std::vector<std::size_t> order(classes_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.class_probs[a] > out.class_probs[b];
  });
  std::vector<std::pair<std::string, double>> top;
  for (std::size_t i = 0; i < k; ++i) {
    if (i < order.size())
      top.emplace_back(classes_[order[i]], out.class_probs[order[i]]);
    else
      top.emplace_back(std::string(kNullClass), 0.0);
  }
  return top;
}

PathContextEmbedder train_path_embedder(std::span<const CodeSample* const> samples,
                                        const PathEmbedderConfig& config,
                                        double* train_accuracy) {
  if (config.embedding_dim == 0 || config.code_dim == 0 || config.batch_size == 0)
    throw ConfigError("invalid path embedder dimensions");
  struct Row {
    std::vector<PathContext> contexts;
    std::string cls;
  };
  std::vector<Row> rows;
  std::set<std::string> class_set, terminal_set, path_set;
  for (const CodeSample* s : samples) {
    const ParsedMethod pm = parse_method(s->source);
    Row r{extract_ast_paths(pm, config.max_paths, config.max_length),
          method_class(pm.identifiers.method_name)};
    if (r.cls.empty()) continue;
    class_set.insert(r.cls);
    for (const auto& c : r.contexts) {
      terminal_set.insert(c.left);
      terminal_set.insert(c.right);
      path_set.insert(c.path);
    }
    rows.push_back(std::move(r));
  }
  if (class_set.size() < 2)
    throw Error("path embedder needs at least two method classes, got " +
                std::to_string(class_set.size()));

  PathContextEmbedder m;
  m.config_ = config;
  m.classes_.assign(class_set.begin(), class_set.end());
  m.terminals_.push_back(std::string(kUnknown));
  m.terminals_.insert(m.terminals_.end(), terminal_set.begin(), terminal_set.end());
  m.paths_.push_back(std::string(kUnknown));
  m.paths_.insert(m.paths_.end(), path_set.begin(), path_set.end());
  for (std::size_t i = 0; i < m.terminals_.size(); ++i) m.terminal_index_[m.terminals_[i]] = i;
  for (std::size_t i = 0; i < m.paths_.size(); ++i) m.path_index_[m.paths_[i]] = i;

  const std::size_t E = config.embedding_dim, D = config.code_dim, C = m.classes_.size();
  const std::size_t W3 = 3 * E;
  std::mt19937_64 rng(config.seed);
  auto fill = [&](std::vector<float>& v, std::size_t n, float bound) {
    std::uniform_real_distribution<float> dist(-bound, bound);
    v.resize(n);
    for (auto& x : v) x = dist(rng);
  };
  fill(m.terminal_emb_, m.terminals_.size() * E, 0.1f);
  fill(m.path_emb_, m.paths_.size() * E, 0.1f);
  fill(m.w_, D * W3, std::sqrt(6.f / static_cast<float>(D + W3)));
  fill(m.attention_, D, std::sqrt(6.f / static_cast<float>(D + 1)));
  fill(m.out_w_, C * D, std::sqrt(6.f / static_cast<float>(C + D)));
  m.out_b_.assign(C, 0.f);

  std::vector<PathContextEmbedder::Indexed> indexed;
  std::vector<std::size_t> labels;
  for (const auto& r : rows) {
    indexed.push_back(m.index(r.contexts));
    labels.push_back(static_cast<std::size_t>(
        std::lower_bound(m.classes_.begin(), m.classes_.end(), r.cls) - m.classes_.begin()));
  }

  std::vector<std::vector<float>*> params = {&m.terminal_emb_, &m.path_emb_, &m.w_,
                                             &m.attention_,    &m.out_w_,    &m.out_b_};
  std::vector<std::vector<float>> adam_m, adam_v, grad;
  for (auto* p : params) {
    adam_m.emplace_back(p->size(), 0.f);
    adam_v.emplace_back(p->size(), 0.f);
    grad.emplace_back(p->size(), 0.f);
  }
  const float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
  std::size_t step = 0;

  auto sample_grad = [&](std::size_t idx, SampleGrad& g) {
    const auto& ix = indexed[idx];
    const std::size_t n = ix.path.size();
    Forward f = run_forward(config, C, m.terminal_emb_.data(), m.path_emb_.data(), m.w_.data(),
                            m.attention_.data(), m.out_w_.data(), m.out_b_.data(), ix.left,
                            ix.path, ix.right);
    const std::size_t y = labels[idx];
    g.loss = -std::log(std::max(f.probs[y], 1e-300));
    g.correct = static_cast<std::size_t>(std::max_element(f.probs.begin(), f.probs.end()) -
                                         f.probs.begin()) == y;
    g.w.assign(D * W3, 0.f);
    g.att.assign(D, 0.f);
    g.ow.assign(C * D, 0.f);
    g.ob.assign(C, 0.f);
    g.te.clear();
    g.pe.clear();
    std::vector<float> dv(D, 0.f);
    for (std::size_t c = 0; c < C; ++c) {
      const float dl = static_cast<float>(f.probs[c] - (c == y ? 1.0 : 0.0));
      g.ob[c] = dl;
      for (std::size_t d = 0; d < D; ++d) {
        g.ow[c * D + d] = dl * f.v[d];
        dv[d] += dl * m.out_w_[c * D + d];
      }
    }
    if (n == 0) return;
    std::vector<double> dalpha(n);
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0;
      for (std::size_t d = 0; d < D; ++d) acc += static_cast<double>(dv[d]) * f.c[i * D + d];
      dalpha[i] = acc;
      mean += f.alpha[i] * acc;
    }
    const std::size_t u = f.uniq.size();
    std::vector<float> dl(u * D, 0.f), dr(u * D, 0.f), dh(D);
    for (std::size_t i = 0; i < n; ++i) {
      const float ds = static_cast<float>(f.alpha[i] * (dalpha[i] - mean));
      const float a = static_cast<float>(f.alpha[i]);
      const float* ci = &f.c[i * D];
      for (std::size_t d = 0; d < D; ++d) {
        g.att[d] += ds * ci[d];
        dh[d] = (a * dv[d] + ds * m.attention_[d]) * (1.f - ci[d] * ci[d]);
      }
      float* lrow = &dl[f.left_slot[i] * D];
      float* rrow = &dr[f.right_slot[i] * D];
      for (std::size_t d = 0; d < D; ++d) {
        lrow[d] += dh[d];
        rrow[d] += dh[d];
      }
      const float* e = &m.path_emb_[ix.path[i] * E];
      std::vector<float> de(E, 0.f);
      for (std::size_t d = 0; d < D; ++d) {
        float* gw = &g.w[d * W3 + E];
        const float* wp = &m.w_[d * W3 + E];
        for (std::size_t k = 0; k < E; ++k) {
          gw[k] += dh[d] * e[k];
          de[k] += dh[d] * wp[k];
        }
      }
      g.pe.emplace_back(ix.path[i], std::move(de));
    }
    for (std::size_t s = 0; s < u; ++s) {
      const float* e = &m.terminal_emb_[f.uniq[s] * E];
      std::vector<float> de(E, 0.f);
      for (std::size_t d = 0; d < D; ++d) {
        float* gl = &g.w[d * W3];
        float* gr = gl + 2 * E;
        const float* wl = &m.w_[d * W3];
        const float* wr = wl + 2 * E;
        const float l = dl[s * D + d], r = dr[s * D + d];
        for (std::size_t k = 0; k < E; ++k) {
          gl[k] += l * e[k];
          gr[k] += r * e[k];
          de[k] += l * wl[k] + r * wr[k];
        }
      }
      g.te.emplace_back(f.uniq[s], std::move(de));
    }
  };

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t correct = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t bs = std::min(config.batch_size, order.size() - start);
      std::vector<SampleGrad> grads(bs);
#pragma omp parallel for schedule(dynamic)
      for (std::size_t b = 0; b < bs; ++b) sample_grad(order[start + b], grads[b]);

      for (auto& gv : grad) std::fill(gv.begin(), gv.end(), 0.f);
      const float inv = 1.f / static_cast<float>(bs);
      for (const auto& g : grads) {  // fixed order keeps the sum reproducible
        correct += g.correct;
        for (const auto& [row, de] : g.te)
          for (std::size_t k = 0; k < E; ++k) grad[0][row * E + k] += de[k] * inv;
        for (const auto& [row, de] : g.pe)
          for (std::size_t k = 0; k < E; ++k) grad[1][row * E + k] += de[k] * inv;
        for (std::size_t k = 0; k < g.w.size(); ++k) grad[2][k] += g.w[k] * inv;
        for (std::size_t k = 0; k < D; ++k) grad[3][k] += g.att[k] * inv;
        for (std::size_t k = 0; k < g.ow.size(); ++k) grad[4][k] += g.ow[k] * inv;
        for (std::size_t k = 0; k < C; ++k) grad[5][k] += g.ob[k] * inv;
      }
      ++step;
      const float lr = static_cast<float>(config.learning_rate);
      const float c1 = 1.f - std::pow(beta1, static_cast<float>(step));
      const float c2 = 1.f - std::pow(beta2, static_cast<float>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto& val = *params[p];
        for (std::size_t k = 0; k < val.size(); ++k) {
          const float gk = grad[p][k];
          adam_m[p][k] = beta1 * adam_m[p][k] + (1 - beta1) * gk;
          adam_v[p][k] = beta2 * adam_v[p][k] + (1 - beta2) * gk * gk;
          val[k] -= lr * (adam_m[p][k] / c1) / (std::sqrt(adam_v[p][k] / c2) + eps);
        }
      }
    }
  }
  if (train_accuracy)
    *train_accuracy = rows.empty() ? 0.0 : static_cast<double>(correct) / rows.size();
  return m;
}

void PathContextEmbedder::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  ckpt.format = kFormat;
  ckpt.version = kVersion;
  ckpt.meta = {{"embedding_dim", config_.embedding_dim},
               {"code_dim", config_.code_dim},
               {"max_paths", config_.max_paths},
               {"max_length", config_.max_length},
               {"epochs", config_.epochs},
               {"batch_size", config_.batch_size},
               {"learning_rate", config_.learning_rate},
               {"seed", config_.seed},
               {"classes", classes_},
               {"terminals", terminals_},
               {"paths", paths_}};
  const std::size_t E = config_.embedding_dim, D = config_.code_dim;
  ckpt.blobs.push_back({"terminal_embeddings", {terminals_.size(), E}, terminal_emb_});
  ckpt.blobs.push_back({"path_embeddings", {paths_.size(), E}, path_emb_});
  ckpt.blobs.push_back({"context_weights", {D, 3 * E}, w_});
  ckpt.blobs.push_back({"attention", {D}, attention_});
  ckpt.blobs.push_back({"output_weights", {classes_.size(), D}, out_w_});
  ckpt.blobs.push_back({"output_bias", {classes_.size()}, out_b_});
  save_checkpoint(path, ckpt);
}

PathContextEmbedder PathContextEmbedder::load(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path, kFormat, kVersion);
  PathContextEmbedder m;
  try {
    const auto& j = ckpt.meta;
    m.config_.embedding_dim = j.at("embedding_dim");
    m.config_.code_dim = j.at("code_dim");
    m.config_.max_paths = j.at("max_paths");
    m.config_.max_length = j.at("max_length");
    m.config_.epochs = j.at("epochs");
    m.config_.batch_size = j.at("batch_size");
    m.config_.learning_rate = j.at("learning_rate");
    m.config_.seed = j.at("seed");
    m.classes_ = j.at("classes").get<std::vector<std::string>>();
    m.terminals_ = j.at("terminals").get<std::vector<std::string>>();
    m.paths_ = j.at("paths").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error("corrupt path embedder header in " + path.string() + ": " + ex.what());
  }
  for (std::size_t i = 0; i < m.terminals_.size(); ++i) m.terminal_index_[m.terminals_[i]] = i;
  for (std::size_t i = 0; i < m.paths_.size(); ++i) m.path_index_[m.paths_[i]] = i;
  m.terminal_emb_ = ckpt.blob("terminal_embeddings").values;
  m.path_emb_ = ckpt.blob("path_embeddings").values;
  m.w_ = ckpt.blob("context_weights").values;
  m.attention_ = ckpt.blob("attention").values;
  m.out_w_ = ckpt.blob("output_weights").values;
  m.out_b_ = ckpt.blob("output_bias").values;
  const std::size_t E = m.config_.embedding_dim, D = m.config_.code_dim;
  if (m.terminal_emb_.size() != m.terminals_.size() * E || m.path_emb_.size() != m.paths_.size() * E ||
      m.w_.size() != D * 3 * E || m.attention_.size() != D ||
      m.out_w_.size() != m.classes_.size() * D || m.out_b_.size() != m.classes_.size())
    throw Error("path embedder checkpoint " + path.string() + " has inconsistent shapes");
  return m;
}

}  // namespace codeshield
