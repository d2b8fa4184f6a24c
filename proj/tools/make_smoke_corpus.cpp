// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Regenerates data/smoke_corpus.jsonl: make_smoke_corpus OUT [COUNT] [SEED]

#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "codeshield/corpus.hpp"
#include "codeshield/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_smoke_corpus OUT [COUNT] [SEED]\n";
    return 1;
  }
  const std::size_t count = argc > 2 ? std::stoull(argv[2]) : 200;
  const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 2026;
  std::ofstream out(argv[1], std::ios::binary);
  for (auto& source : codeshield::generate_synthetic_corpus(count, seed)) {
    const std::string id = codeshield::sample_id(source);
    out << nlohmann::json{{"id", id}, {"source", source}}.dump() << "\n";
  }
  return out ? 0 : 1;
}
