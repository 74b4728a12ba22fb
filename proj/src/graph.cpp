#include "isdg/graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace isdg {
namespace {

const std::vector<std::string>& special_names() {
  static const std::vector<std::string> names = {
      "NONE", "SELF", "SUBTOKEN", "CROSS_SENTENCE", "CROSS_TYPE", "UNK", "R-UNK",
  };
  return names;
}

}  // namespace

RelationVocab::RelationVocab() : names_(special_names()) {}

RelationVocab RelationVocab::from_labels(const std::vector<std::string>& labels) {
  std::set<std::string> unique;
  for (const auto& l : labels) {
    std::string label = normalize_deprel(l);
    if (label.empty()) throw ValidationError("empty relation label");
    if (label == "UNK") continue;
    unique.insert(std::move(label));
  }
  RelationVocab vocab;
  if (special_names().size() + 2 * unique.size() > 256) {
    throw ValidationError("too many relation labels for one-byte relation ids: " +
                          std::to_string(unique.size()));
  }
  for (const auto& label : unique) {
    vocab.names_.push_back(label);
    vocab.names_.push_back(std::string(kReversePrefix) + label);
  }
  return vocab;
}

RelationVocab RelationVocab::from_names(const std::vector<std::string>& names) {
  const auto& specials = special_names();
  if (names.size() < specials.size() || (names.size() - specials.size()) % 2 != 0 ||
      !std::equal(specials.begin(), specials.end(), names.begin())) {
    throw ValidationError("malformed relation vocabulary");
  }
  std::vector<std::string> labels;
  for (std::size_t i = specials.size(); i < names.size(); i += 2) {
    if (names[i + 1] != std::string(kReversePrefix) + names[i]) {
      throw ValidationError("relation vocabulary: '" + names[i + 1] +
                            "' is not the reverse of '" + names[i] + "'");
    }
    labels.push_back(names[i]);
  }
  RelationVocab vocab = from_labels(labels);
  if (vocab.names_ != names) throw ValidationError("relation vocabulary is not canonical");
  return vocab;
}

RelationId RelationVocab::deprel(std::string_view label) const {
  std::string key = normalize_deprel(label);
  auto begin = names_.begin() + kNumSpecial;
  // labels occupy even offsets and are sorted
  int lo = 0, hi = static_cast<int>(names_.size() - kNumSpecial) / 2;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    const std::string& cand = *(begin + 2 * mid);
    if (cand == key) return static_cast<RelationId>(kNumSpecial + 2 * mid);
    if (cand < key) lo = mid + 1; else hi = mid;
  }
  return kUnk;
}

RelationId RelationVocab::reverse_of(RelationId id) const {
  switch (kind(id)) {
    case RelationKind::kDeprel: return static_cast<RelationId>(id + 1);
    case RelationKind::kReverse: return static_cast<RelationId>(id - 1);
    default: return id;
  }
}

RelationKind RelationVocab::kind(RelationId id) const {
  switch (id) {
    case kNone: return RelationKind::kNone;
    case kSelf: return RelationKind::kSelf;
    case kSubtoken: return RelationKind::kSubtoken;
    case kCrossSentence: return RelationKind::kCrossSentence;
    case kCrossType: return RelationKind::kCrossType;
    default: break;
  }
  if (id >= names_.size()) throw std::out_of_range("relation id " + std::to_string(id));
  // UNK (5) and labels (7, 9, ...) are odd ids
  return (id % 2 == 1) ? RelationKind::kDeprel : RelationKind::kReverse;
}

std::vector<std::string> RelationVocab::labels() const {
  std::vector<std::string> out;
  for (std::size_t i = kNumSpecial; i < names_.size(); i += 2) out.push_back(names_[i]);
  return out;
}

std::vector<std::vector<int>> ISDGraph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (at(i, j) != RelationVocab::kNone) adj[i].push_back(j);
    }
  }
  return adj;
}

ISDGraph build_isdg(const AlignedSequence& seq, const RelationVocab& vocab) {
  ISDGraph g;
  g.n = seq.size();
  g.rel.assign(static_cast<std::size_t>(g.n) * g.n, RelationVocab::kNone);
  g.sentence_of.assign(g.n, -1);
  g.segment_of = seq.segment;
  for (int i = 0; i < g.n; ++i) {
    g.at(i, i) = RelationVocab::kSelf;
    if (const int w = seq.nodes[i].word_ref; w != kNoWord) g.sentence_of[i] = seq.words[w].sentence;
  }
  for (const auto& word : seq.words) {
    for (int a = word.nodes.begin; a < word.nodes.end; ++a) {
      for (int b = word.nodes.begin; b < word.nodes.end; ++b) {
        if (a != b) g.at(a, b) = RelationVocab::kSubtoken;
      }
    }
    if (word.head < 0) continue;
    const auto& head = seq.words[word.head];
    const RelationId forward = vocab.deprel(word.deprel);
    const RelationId backward = vocab.reverse_of(forward);
    for (int h = head.nodes.begin; h < head.nodes.end; ++h) {
      for (int c = word.nodes.begin; c < word.nodes.end; ++c) {
        g.at(h, c) = forward;
        g.at(c, h) = backward;
      }
    }
  }
  for (const auto& sentence : seq.sentences) {
    const auto& root = seq.words.at(sentence.root_word);
    if (root.head != -1 || root.nodes.size() == 0) {
      throw std::logic_error("sentence without a root word");
    }
    g.roots.push_back(root.nodes.begin);
  }
  for (std::size_t a = 0; a < seq.sentences.size(); ++a) {
    for (std::size_t b = 0; b < seq.sentences.size(); ++b) {
      if (a == b) continue;
      const RelationId r = seq.sentences[a].segment == seq.sentences[b].segment
                               ? RelationVocab::kCrossSentence
                               : RelationVocab::kCrossType;
      g.at(g.roots[a], g.roots[b]) = r;
    }
  }
  return g;
}

std::size_t SoftPathTable::total_elements() const {
  std::size_t total = 0;
  for (const auto& p : out_path) total += p.size();
  for (const auto& p : in_path) total += p.size();
  return total;
}

SoftPathTable build_soft_paths(const AlignedSequence& seq, const ISDGraph& graph) {
  SoftPathTable table;
  table.out_path.resize(graph.n);
  table.in_path.resize(graph.n);
  for (int i = 0; i < graph.n; ++i) {
    Path& out = table.out_path[i];
    out.push_back(PathElement::node(i));
    const int w = seq.nodes[i].word_ref;
    if (w != kNoWord) {
      const auto& word = seq.words[w];
      int prev = i;
      if (word.head < 0 && i != word.nodes.begin) {
        // non-first subtoken of the root word
        out.push_back(PathElement::relation(graph.at(i, word.nodes.begin)));
        out.push_back(PathElement::node(word.nodes.begin));
      }
      for (int h = word.head; h >= 0; h = seq.words[h].head) {
        const int next = seq.words[h].nodes.begin;
        out.push_back(PathElement::relation(graph.at(prev, next)));
        out.push_back(PathElement::node(next));
        prev = next;
      }
    }
    Path& in = table.in_path[i];
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      if (it->is_node()) {
        in.push_back(*it);
      } else {
        // relation between the nodes on either side, traversed backwards
        const int from = (it + 1)->index;  // node closer to the root
        const int to = (it - 1)->index;
        in.push_back(PathElement::relation(graph.at(to, from)));
      }
    }
  }
  return table;
}

SoftPathTable truncate_paths(const SoftPathTable& table, int max_len) {
  if (max_len < 1) throw ValidationError("max path length must be at least 1");
  SoftPathTable out;
  out.max_path_len = max_len;
  const std::size_t bound = static_cast<std::size_t>(max_len);
  for (const auto& p : table.out_path) {
    out.out_path.emplace_back(p.begin(), p.begin() + std::min(bound, p.size()));
  }
  for (const auto& p : table.in_path) {
    out.in_path.emplace_back(p.end() - std::min(bound, p.size()), p.end());
  }
  return out;
}

Path soft_path(const ISDGraph& graph, const SoftPathTable& table, int i, int j) {
  if (i < 0 || j < 0 || i >= graph.n || j >= graph.n || graph.is_special(i) ||
      graph.is_special(j)) {
    throw ValidationError("soft path endpoints must be non-special nodes");
  }
  Path tau = table.out_path[i];
  tau.insert(tau.end(), table.in_path[j].begin(), table.in_path[j].end());
  return tau;
}

Path mirror_path(const Path& path, const RelationVocab& vocab) {
  Path out(path.rbegin(), path.rend());
  for (auto& e : out) {
    if (!e.is_node()) e.index = vocab.reverse_of(static_cast<RelationId>(e.index));
  }
  return out;
}

}  // namespace isdg
