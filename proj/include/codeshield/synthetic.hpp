// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace codeshield {

/// Generates `count` distinct Java-like methods from a fixed set of method
/// families (get, set, count, sum, find, is, max, copy, print, remove, sort,
/// reverse). The first camelCase word of each method name is its family.
/// Deterministic in `seed`.
std::vector<std::string> generate_synthetic_corpus(std::size_t count, std::uint64_t seed);

/// The family verbs, in generation order.
const std::vector<std::string>& synthetic_families();

}  // namespace codeshield
