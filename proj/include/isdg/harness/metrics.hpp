#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace isdg::harness {

// Lowercase, drop ASCII punctuation, drop the articles "an" and "the",
// collapse whitespace.
std::string normalize_answer(std::string_view text);

struct F1Em {
  double f1 = 0;
  double em = 0;
  bool operator==(const F1Em&) const = default;
};

// Token-level F1 and exact match against the best-scoring gold.
F1Em squad_f1_em(std::string_view prediction, const std::vector<std::string>& golds);

}  // namespace isdg::harness
