#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "isdg/align.hpp"
#include "isdg/graph.hpp"
#include "isdg/nn/random.hpp"
#include "isdg/tokenizer.hpp"
#include "isdg/ud.hpp"

namespace testsupport {

inline const std::vector<std::string>& syllables() {
  static const std::vector<std::string> s = {"ka", "lo", "mi", "ne", "su", "ta", "ri", "po", "de", "gu"};
  return s;
}

// Every syllable standalone and as a continuation, plus all single letters.
inline isdg::WordPieceTokenizer test_tokenizer() {
  std::vector<std::string> pieces;
  for (const auto& s : syllables()) {
    pieces.push_back(s);
    pieces.push_back("##" + s);
  }
  for (char c : std::string("abcdefghijklmnopqrstuvwxyz.")) {
    pieces.push_back(std::string(1, c));
    pieces.push_back("##" + std::string(1, c));
  }
  return isdg::WordPieceTokenizer(pieces);
}

inline std::string random_word(isdg::nn::Rng& rng, int max_syllables = 3) {
  std::string w;
  const int k = rng.uniform_int(1, max_syllables);
  for (int i = 0; i < k; ++i) w += rng.pick(syllables());
  return w;
}

inline const std::vector<std::string>& test_labels() {
  static const std::vector<std::string> l = {"nsubj", "obj", "amod", "det", "obl", "nmod", "advmod"};
  return l;
}

// Random tree: a random visiting order, each word attached to an earlier one.
// max_depth < 0 leaves the depth unconstrained.
inline std::vector<int> random_heads(isdg::nn::Rng& rng, int n, int max_depth = -1) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<int> head(n, -1), depth(n, 0);
  for (int k = 1; k < n; ++k) {
    std::vector<int> candidates;
    for (int j = 0; j < k; ++j) {
      if (max_depth < 0 || depth[order[j]] < max_depth) candidates.push_back(order[j]);
    }
    const int parent = rng.pick(candidates);
    head[order[k]] = parent;
    depth[order[k]] = depth[parent] + 1;
  }
  return head;
}

struct SentenceSpec {
  std::vector<std::string> forms;
  std::vector<int> heads;  // 0-based, -1 root
  std::vector<std::string> deprels;
  std::vector<std::string> upos;
  // MWT rows: first word index (0-based) and surface form covering two words.
  std::vector<std::pair<int, std::string>> mwts;
};

inline std::string sentence_conllu(const SentenceSpec& s) {
  std::string text;
  std::vector<std::string> surface;
  for (std::size_t w = 0; w < s.forms.size(); ++w) {
    auto it = std::find_if(s.mwts.begin(), s.mwts.end(), [&](const auto& m) { return m.first == static_cast<int>(w); });
    if (it != s.mwts.end()) {
      surface.push_back(it->second);
      ++w;
    } else {
      surface.push_back(s.forms[w]);
    }
  }
  for (std::size_t i = 0; i < surface.size(); ++i) text += (i ? " " : "") + surface[i];
  std::string out = "# text = " + text + "\n";
  for (std::size_t w = 0; w < s.forms.size(); ++w) {
    for (const auto& [first, form] : s.mwts) {
      if (first == static_cast<int>(w)) {
        out += std::to_string(w + 1) + "-" + std::to_string(w + 2) + "\t" + form + "\t_\t_\t_\t_\t_\t_\t_\t_\n";
      }
    }
    out += std::to_string(w + 1) + "\t" + s.forms[w] + "\t_\t" + (s.upos.empty() ? "NOUN" : s.upos[w]) + "\t_\t_\t" +
           std::to_string(s.heads[w] + 1) + "\t" + s.deprels[w] + "\t_\t_\n";
  }
  return out + "\n";
}

inline SentenceSpec random_sentence(isdg::nn::Rng& rng, int min_words, int max_words, int max_depth = -1,
                                    double mwt_probability = 0.0) {
  SentenceSpec s;
  const int n = rng.uniform_int(min_words, max_words);
  s.heads = random_heads(rng, n, max_depth);
  static const std::vector<std::string> tags = {"NOUN", "VERB", "ADJ", "DET", "ADP", "PRON", "PROPN"};
  for (int w = 0; w < n; ++w) {
    s.forms.push_back(random_word(rng));
    s.deprels.push_back(s.heads[w] < 0 ? "root" : rng.pick(test_labels()));
    s.upos.push_back(rng.pick(tags));
  }
  for (int w = 0; w + 1 < n; ++w) {
    if (rng.bernoulli(mwt_probability)) {
      // Alternate tiling and non-tiling forms.
      s.mwts.push_back({w, rng.bernoulli(0.5) ? s.forms[w] + s.forms[w + 1] : s.forms[w].substr(0, 1) + "z"});
      ++w;
    }
  }
  return s;
}

inline isdg::UDDocument random_document(isdg::nn::Rng& rng, int sentences, int min_words, int max_words,
                                        int max_depth = -1, double mwt_probability = 0.0) {
  std::string text;
  for (int i = 0; i < sentences; ++i) text += sentence_conllu(random_sentence(rng, min_words, max_words, max_depth, mwt_probability));
  return isdg::parse_conllu(text);
}

// Breadth-first distances over non-NONE edges, optionally skipping one kind.
inline std::vector<int> bfs(const isdg::ISDGraph& g, int source) {
  std::vector<int> dist(g.n, -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v = 0; v < g.n; ++v) {
      if (g.at(u, v) != isdg::RelationVocab::kNone && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

}  // namespace testsupport
