#include "isdg/harness/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace isdg::harness {
namespace {

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

bool is_article(const std::string& tok) { return tok == "an" || tok == "the"; }

F1Em score_one(const std::string& pred, const std::string& gold) {
  const auto p = split_ws(pred);
  const auto g = split_ws(gold);
  F1Em r;
  r.em = pred == gold ? 1.0 : 0.0;
  if (p.empty() || g.empty()) {
    r.f1 = p.empty() && g.empty() ? 1.0 : 0.0;
    return r;
  }
  std::map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  int same = 0;
  for (const auto& t : p) {
    if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return r;
  const double precision = static_cast<double>(same) / p.size();
  const double recall = static_cast<double>(same) / g.size();
  r.f1 = 2 * precision * recall / (precision + recall);
  return r;
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && std::ispunct(u)) continue;
    lowered.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
  }
  std::string out;
  for (const auto& tok : split_ws(lowered)) {
    if (is_article(tok)) continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

F1Em squad_f1_em(std::string_view prediction, const std::vector<std::string>& golds) {
  const std::string pred = normalize_answer(prediction);
  F1Em best;
  for (const auto& gold : golds) {
    const F1Em r = score_one(pred, normalize_answer(gold));
    best.f1 = std::max(best.f1, r.f1);
    best.em = std::max(best.em, r.em);
  }
  return best;
}

}  // namespace isdg::harness
