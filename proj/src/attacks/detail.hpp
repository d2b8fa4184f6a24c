// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "codeshield/corpus.hpp"

namespace codeshield::detail {

inline CodeSample as_poisoned(CodeSample transformed, const CodeSample& origin, Attack attack) {
  transformed.label = Label::poisoned;
  transformed.attack = attack;
  transformed.origin_id = origin.id;
  return transformed;
}

}  // namespace codeshield::detail
