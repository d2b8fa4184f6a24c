// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/json_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "codeshield/common.hpp"

namespace codeshield {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written as native little-endian floats");

json sample_to_json(const CodeSample& s) {
  json j;
  j["id"] = s.id;
  j["source"] = s.source;
  j["label"] = to_string(s.label);
  j["attack"] = to_string(s.attack);
  j["split"] = to_string(s.split);
  if (s.label == Label::poisoned) {
    j["origin_id"] = s.origin_id;
    json log = json::array();
    for (const auto& t : s.transform_log) {
      json r = {{"kind", t.kind}, {"old", t.old_text}, {"new", t.new_text},
                {"position", t.position}};
      if (t.similarity) r["similarity"] = *t.similarity;
      log.push_back(std::move(r));
    }
    j["transform_log"] = std::move(log);
  }
  return j;
}

CodeSample sample_from_json(const json& j) {
  CodeSample s;
  s.id = j.at("id").get<std::string>();
  s.source = j.at("source").get<std::string>();
  s.label = parse_label(j.at("label").get<std::string>());
  s.attack = parse_attack(j.at("attack").get<std::string>());
  s.split = parse_split(j.at("split").get<std::string>());
  if (j.contains("origin_id")) s.origin_id = j["origin_id"].get<std::string>();
  if (j.contains("transform_log")) {
    for (const auto& r : j["transform_log"]) {
      TransformRecord t;
      t.kind = r.at("kind").get<std::string>();
      t.old_text = r.at("old").get<std::string>();
      t.new_text = r.at("new").get<std::string>();
      t.position = r.at("position").get<std::size_t>();
      if (r.contains("similarity")) t.similarity = r["similarity"].get<double>();
      s.transform_log.push_back(std::move(t));
    }
  }
  return s;
}

static void ensure_parent(const fs::path& path) {
  if (!path.has_parent_path()) return;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
}

void write_text_file(const fs::path& path, std::string_view text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& ex) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

const Blob& Checkpoint::blob(std::string_view name) const {
  for (const auto& b : blobs)
    if (b.name == name) return b;
  throw Error("checkpoint has no blob '" + std::string(name) + "'");
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  json header;
  header["format"] = ckpt.format;
  header["version"] = ckpt.version;
  header["meta"] = ckpt.meta;
  json blobs = json::array();
  for (const auto& b : ckpt.blobs) {
    std::size_t expect = 1;
    for (auto d : b.shape) expect *= d;
    if (expect != b.values.size())
      throw Error("blob '" + b.name + "' shape does not match its size");
    blobs.push_back({{"name", b.name}, {"shape", b.shape}});
  }
  header["blobs"] = blobs;

  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  const std::string h = header.dump();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.put('\n');
  for (const auto& b : ckpt.blobs)
    out.write(reinterpret_cast<const char*>(b.values.data()),
              static_cast<std::streamsize>(b.values.size() * sizeof(float)));
  if (!out) throw Error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path, std::string_view expected_format,
                           int expected_version) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    throw Error("corrupt checkpoint header in " + path.string());
  }
  Checkpoint ckpt;
  try {
    ckpt.format = header.at("format").get<std::string>();
    ckpt.version = header.at("version").get<int>();
    ckpt.meta = header.value("meta", json::object());
    if (ckpt.format != expected_format)
      throw Error("checkpoint " + path.string() + " has format '" + ckpt.format +
                  "', expected '" + std::string(expected_format) + "'");
    if (ckpt.version != expected_version)
      throw Error("checkpoint " + path.string() + " has version " +
                  std::to_string(ckpt.version) + ", expected " +
                  std::to_string(expected_version));
    for (const auto& bj : header.at("blobs")) {
      Blob b;
      b.name = bj.at("name").get<std::string>();
      b.shape = bj.at("shape").get<std::vector<std::size_t>>();
      std::size_t n = 1;
      for (auto d : b.shape) n *= d;
      b.values.resize(n);
      in.read(reinterpret_cast<char*>(b.values.data()),
              static_cast<std::streamsize>(n * sizeof(float)));
      if (!in) throw Error("checkpoint " + path.string() + " is truncated");
      ckpt.blobs.push_back(std::move(b));
    }
  } catch (const json::exception& ex) {
    throw Error("corrupt checkpoint header in " + path.string() + ": " + ex.what());
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw Error("checkpoint " + path.string() + " has trailing bytes");
  return ckpt;
}

}  // namespace codeshield
