#include "isdg/harness/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "isdg/errors.hpp"
#include "isdg/nn/random.hpp"

namespace isdg::harness {
namespace {

using nn::Rng;

constexpr std::string_view kConsonants = "bdfghklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
// Appears only inside contracted multi-word tokens, never in word forms.
constexpr std::string_view kContractionMark = "\xC3\xA0";  // "à"

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::string> syllables() {
  std::vector<std::string> out;
  for (char c : kConsonants) {
    for (char v : kVowels) out.push_back(std::string{c, v});
  }
  return out;
}

// Distinct pseudo-words of one to three syllables.
class FormPool {
 public:
  explicit FormPool(Rng& rng) : rng_(rng), syllables_(syllables()) {
    for (const char* reserved : {"the", "a", "an"}) used_.insert(reserved);
  }
  std::string next(int min_syllables, int max_syllables) {
    for (;;) {
      const int count = rng_.uniform_int(min_syllables, max_syllables);
      std::string word;
      for (int i = 0; i < count; ++i) word += rng_.pick(syllables_);
      if (used_.insert(word).second) return word;
    }
  }
  std::vector<std::string> take(int n, int min_syllables, int max_syllables) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(next(min_syllables, max_syllables));
    return out;
  }

 private:
  Rng& rng_;
  std::vector<std::string> syllables_;
  std::set<std::string> used_;
};

struct GenNode {
  int head = -1;
  std::string label;  // may carry a subtype
  Upos upos = Upos::NOUN;
  std::string form;
  std::vector<int> children;
  int depth = 0;
  bool decoration = false;
};

class SentenceTree {
 public:
  int add(int head, std::string label, Upos upos) {
    GenNode n;
    n.head = head;
    n.label = std::move(label);
    n.upos = upos;
    n.depth = head < 0 ? 0 : nodes[head].depth + 1;
    nodes.push_back(n);
    const int id = static_cast<int>(nodes.size()) - 1;
    if (head >= 0) nodes[head].children.push_back(id);
    return id;
  }
  int max_depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }
  void collect(int node, std::vector<int>& out) const {
    out.push_back(node);
    for (int c : nodes[node].children) collect(c, out);
  }
  std::vector<GenNode> nodes;
};

struct BuiltSentence {
  UDSentence sentence;
  std::vector<std::string> labels;
  // Per word, its span within raw_text.
  std::vector<CharSpan> spans;
  bool mwt = false;
  bool non_tiling = false;
};

class ExampleBuilder {
 public:
  ExampleBuilder(const GeneratorOptions& options, const Lexicon& lexicon, std::uint64_t seed)
      : options_(options), lex_(lexicon), rng_(seed) {}

  std::string structural_label() {
    if (rng_.bernoulli(0.8)) return rng_.pick(lex_.answer_relations);
    return rng_.bernoulli(0.5) ? "compound" : "conj";
  }

  void grow(SentenceTree& tree, int node, int depth_left, int extra) {
    int tip = node;
    for (int d = 0; d < depth_left; ++d) tip = tree.add(tip, structural_label(), Upos::NOUN);
    const int limit = tree.nodes[node].depth + depth_left;
    std::vector<int> members;
    tree.collect(node, members);
    for (int e = 0; e < extra; ++e) {
      std::vector<int> open;
      for (int m : members) {
        if (tree.nodes[m].depth < limit) open.push_back(m);
      }
      if (open.empty()) break;
      members.push_back(tree.add(rng_.pick(open), structural_label(), Upos::NOUN));
    }
  }

  void decorate(SentenceTree& tree, int max_depth, const std::set<int>& shallow_only, int shallow_limit) {
    const int count = static_cast<int>(tree.nodes.size());
    for (int i = 0; i < count; ++i) {
      const GenNode& n = tree.nodes[i];
      if (n.decoration || n.depth >= max_depth) continue;
      if (shallow_only.count(i) && n.depth >= shallow_limit) continue;
      if (n.upos == Upos::NOUN || n.upos == Upos::PROPN) {
        if (rng_.bernoulli(0.3)) tree.nodes[tree.add(i, "det", Upos::DET)].decoration = true;
        if (rng_.bernoulli(0.2)) tree.nodes[tree.add(i, "amod", Upos::ADJ)].decoration = true;
        if (n.upos == Upos::NOUN && rng_.bernoulli(0.15)) {
          tree.nodes[tree.add(i, "case", Upos::ADP)].decoration = true;
        }
      } else if (n.upos == Upos::VERB && rng_.bernoulli(0.35)) {
        tree.nodes[tree.add(i, "advmod", Upos::ADV)].decoration = true;
      }
    }
  }

  void assign_forms(SentenceTree& tree, const std::string& anchor) {
    for (auto& n : tree.nodes) {
      if (n.upos == Upos::PROPN) {
        n.form = anchor;
        continue;
      }
      if (n.upos == Upos::NOUN && n.children.empty() && rng_.bernoulli(0.2)) n.upos = Upos::PRON;
      switch (n.upos) {
        case Upos::VERB: n.form = rng_.pick(lex_.verbs); break;
        case Upos::ADJ: n.form = rng_.pick(lex_.adjectives); break;
        case Upos::ADV: n.form = rng_.pick(lex_.adverbs); break;
        case Upos::PRON: n.form = rng_.pick(lex_.pronouns); break;
        case Upos::DET: n.form = rng_.pick(lex_.determiners); break;
        case Upos::ADP: n.form = rng_.pick(lex_.adpositions); break;
        default: n.form = rng_.pick(lex_.nouns); break;
      }
      if (n.label == "obl" && rng_.bernoulli(0.2)) n.label = "obl:tmod";
      if (n.label == "nmod" && rng_.bernoulli(0.2)) n.label = "nmod:poss";
    }
  }

  void linearize(const SentenceTree& tree, int node, std::vector<int>& order) {
    std::vector<int> left, right;
    for (int c : tree.nodes[node].children) {
      const auto& child = tree.nodes[c];
      const bool goes_left = child.upos == Upos::DET || child.upos == Upos::ADP || rng_.bernoulli(0.5);
      (goes_left ? left : right).push_back(c);
    }
    rng_.shuffle(left);
    rng_.shuffle(right);
    // determiners and adpositions sit at the outer left edge
    std::stable_partition(left.begin(), left.end(), [&](int c) {
      return tree.nodes[c].upos == Upos::ADP || tree.nodes[c].upos == Upos::DET;
    });
    for (int c : left) linearize(tree, c, order);
    order.push_back(node);
    for (int c : right) linearize(tree, c, order);
  }

  // Builds words, raw tokens and text. answer_root, if set, receives the
  // linear word range of that node's subtree.
  BuiltSentence realize(SentenceTree& tree, const std::string& punct, bool allow_mwt, int answer_root,
                        std::pair<int, int>* answer_range) {
    const int root = 0;
    tree.add(root, "punct", Upos::PUNCT);
    tree.nodes.back().form = punct;
    tree.nodes.back().decoration = true;
    std::vector<int> order;
    {
      // punctuation is kept out of the shuffle and goes last
      GenNode saved = tree.nodes[root];
      tree.nodes[root].children.pop_back();
      linearize(tree, root, order);
      tree.nodes[root] = saved;
      order.push_back(static_cast<int>(tree.nodes.size()) - 1);
    }
    std::vector<int> position(tree.nodes.size());
    for (std::size_t p = 0; p < order.size(); ++p) position[order[p]] = static_cast<int>(p);

    BuiltSentence out;
    for (std::size_t p = 0; p < order.size(); ++p) {
      const GenNode& n = tree.nodes[order[p]];
      UDWord w;
      w.index = static_cast<int>(p) + 1;
      w.text = n.form;
      w.upos = n.upos;
      w.head = n.head < 0 ? kRootHead : position[n.head];
      w.deprel = normalize_deprel(n.label);
      out.sentence.words.push_back(w);
      out.labels.push_back(n.head < 0 ? "root" : n.label);
    }
    if (answer_root >= 0 && answer_range) {
      std::vector<int> members;
      tree.collect(answer_root, members);
      int lo = static_cast<int>(order.size()), hi = -1;
      for (int m : members) {
        lo = std::min(lo, position[m]);
        hi = std::max(hi, position[m]);
      }
      *answer_range = {lo, hi};
    }

    // optional multi-word token over two adjacent non-punctuation words
    const int word_count = static_cast<int>(out.sentence.words.size());
    int mwt_first = -1;
    bool tiling = true;
    if (allow_mwt && word_count >= 3 && rng_.bernoulli(options_.mwt_probability)) {
      std::vector<int> candidates;
      for (int p = 0; p + 2 < word_count; ++p) {
        const auto& a = out.sentence.words[p];
        const auto& b = out.sentence.words[p + 1];
        if (a.upos != Upos::PROPN && b.upos != Upos::PROPN && b.upos != Upos::PUNCT) candidates.push_back(p);
      }
      if (!candidates.empty()) {
        mwt_first = rng_.pick(candidates);
        tiling = rng_.bernoulli(0.5);
        out.mwt = true;
        out.non_tiling = !tiling;
      }
    }

    std::string text;
    out.spans.resize(word_count);
    for (int p = 0; p < word_count; ++p) {
      auto& w = out.sentence.words[p];
      if (p == mwt_first) {
        auto& next = out.sentence.words[p + 1];
        const std::string token =
            tiling ? w.text + next.text : w.text.substr(0, 1) + std::string(kContractionMark) + next.text.substr(next.text.size() - 1);
        if (!text.empty()) text += ' ';
        const std::size_t start = text.size();
        text += token;
        if (tiling) {
          out.spans[p] = {start, start + w.text.size()};
          out.spans[p + 1] = {start + w.text.size(), text.size()};
        } else {
          out.spans[p] = out.spans[p + 1] = {start, text.size()};
        }
        w.mwt_range = MwtRange{p + 1, p + 2};
        next.mwt_range = MwtRange{p + 1, p + 2};
        out.sentence.raw_tokens.push_back({token, p, p + 1, start});
        ++p;
        continue;
      }
      if (!text.empty() && w.upos != Upos::PUNCT) text += ' ';
      const std::size_t start = text.size();
      text += w.text;
      out.spans[p] = {start, text.size()};
      out.sentence.raw_tokens.push_back({w.text, p, p, start});
    }
    out.sentence.raw_text = text;
    return out;
  }

  SentenceTree distractor_tree() {
    SentenceTree tree;
    const int depth = rng_.uniform_int(options_.min_depth, options_.max_depth);
    tree.add(-1, "root", Upos::VERB);
    grow(tree, 0, depth, rng_.uniform_int(1, 4));
    decorate(tree, depth, {}, 0);
    return tree;
  }

  // Returns the tree and the node whose subtree is the answer.
  SentenceTree answer_tree(int& answer_node, std::string& relation) {
    SentenceTree tree;
    const int depth = rng_.uniform_int(options_.min_depth, options_.max_depth);
    const int anchor_depth = rng_.uniform_int(0, depth - 1);
    int anchor = tree.add(-1, "root", anchor_depth == 0 ? Upos::PROPN : Upos::VERB);
    for (int d = 0; d < anchor_depth; ++d) {
      anchor = tree.add(anchor, structural_label(), d + 1 == anchor_depth ? Upos::PROPN : Upos::NOUN);
    }
    std::vector<std::string> labels = lex_.answer_relations;
    rng_.shuffle(labels);
    const int k = rng_.uniform_int(2, 3);
    const int room = std::min(2, depth - anchor_depth - 1);
    std::vector<int> children;
    std::set<int> answer_side;
    for (int c = 0; c < k; ++c) {
      const int child = tree.add(anchor, labels[c], Upos::NOUN);
      children.push_back(child);
      grow(tree, child, rng_.uniform_int(0, room), rng_.uniform_int(0, 2));
    }
    const int pick = rng_.uniform_int(0, k - 1);
    answer_node = children[pick];
    relation = labels[pick];
    for (int c : children) {
      std::vector<int> members;
      tree.collect(c, members);
      answer_side.insert(members.begin(), members.end());
    }
    if (tree.max_depth() < depth) {
      grow(tree, 0, depth, 0);
    }
    // distractors hang off the part of the tree outside the anchor's children
    for (int e = rng_.uniform_int(0, 2); e > 0; --e) {
      std::vector<int> open;
      for (int i = 0; i < static_cast<int>(tree.nodes.size()); ++i) {
        if (!answer_side.count(i) && i != anchor && tree.nodes[i].depth < depth) open.push_back(i);
      }
      if (open.empty()) break;
      tree.add(rng_.pick(open), structural_label(), Upos::NOUN);
    }
    const int shallow = tree.nodes[answer_node].depth + 2;
    decorate(tree, depth, answer_side, shallow);
    return tree;
  }

  SyntheticExample build(const std::string& id, std::uint64_t seed, const WordPieceTokenizer& tokenizer) {
    for (;;) {
      SyntheticExample ex;
      ex.id = id;
      ex.generator_seed = seed;
      const std::string anchor = rng_.pick(lex_.names);
      const int sentences = rng_.uniform_int(options_.min_context_sentences, options_.max_context_sentences);
      const int answer_sentence = rng_.uniform_int(0, sentences - 1);

      std::vector<BuiltSentence> built;
      std::pair<int, int> range{0, 0};
      std::string relation;
      for (int s = 0; s < sentences; ++s) {
        if (s == answer_sentence) {
          int answer_node = 0;
          SentenceTree tree = answer_tree(answer_node, relation);
          assign_forms(tree, anchor);
          built.push_back(realize(tree, ".", true, answer_node, &range));
        } else {
          SentenceTree tree = distractor_tree();
          assign_forms(tree, anchor);
          built.push_back(realize(tree, ".", true, -1, nullptr));
        }
      }

      // question: cue verb governing a copy of the anchor
      SentenceTree qtree;
      qtree.add(-1, "root", Upos::VERB);
      if (rng_.bernoulli(0.5)) qtree.add(0, "advmod", Upos::ADV);
      qtree.add(0, "obj", Upos::PROPN);
      const auto cue_it = std::find(lex_.answer_relations.begin(), lex_.answer_relations.end(), relation);
      const std::string cue = lex_.cues[cue_it - lex_.answer_relations.begin()];
      assign_forms(qtree, anchor);
      qtree.nodes[0].form = cue;
      BuiltSentence question = realize(qtree, "?", false, -1, nullptr);

      // drop trailing distractor sentences until the packed sequence fits
      auto pieces = [&](const BuiltSentence& b) {
        int total = 0;
        for (const auto& w : b.sentence.words) total += static_cast<int>(tokenizer.tokenize(w.text).size());
        return total;
      };
      int total = 3 + pieces(question);
      for (const auto& b : built) total += pieces(b);
      while (total > options_.max_nodes && static_cast<int>(built.size()) - 1 > answer_sentence) {
        total -= pieces(built.back());
        built.pop_back();
      }
      if (total > options_.max_nodes) continue;

      ex.question.doc_id = id + ".q";
      ex.question.sentences.push_back(question.sentence);
      ex.context.doc_id = id + ".c";
      std::size_t offset = 0;
      for (std::size_t s = 0; s < built.size(); ++s) {
        auto& b = built[s];
        if (static_cast<int>(s) == answer_sentence) {
          GoldAnswer gold;
          gold.span = {offset + b.spans[range.first].start, offset + b.spans[range.second].end};
          ex.answers.push_back(gold);
        }
        ex.has_mwt = ex.has_mwt || b.mwt;
        ex.has_non_tiling_mwt = ex.has_non_tiling_mwt || b.non_tiling;
        ex.context_labels.push_back(b.labels);
        offset += b.sentence.raw_text.size() + 1;
        ex.context.sentences.push_back(std::move(b.sentence));
      }
      const std::string text = document_text(ex.context);
      for (auto& gold : ex.answers) gold.text = text.substr(gold.span.start, gold.span.end - gold.span.start);
      return ex;
    }
  }

 private:
  const GeneratorOptions& options_;
  const Lexicon& lex_;
  Rng rng_;
};

void write_sentence(std::ostringstream& out, const UDSentence& sentence, const std::vector<std::string>* labels,
                    const std::string& sent_id) {
  out << "# sent_id = " << sent_id << "\n# text = " << sentence.raw_text << "\n";
  std::size_t t = 0;
  for (std::size_t w = 0; w < sentence.words.size(); ++w) {
    while (t < sentence.raw_tokens.size() && sentence.raw_tokens[t].last_word < static_cast<int>(w)) ++t;
    if (t < sentence.raw_tokens.size()) {
      const auto& tok = sentence.raw_tokens[t];
      if (tok.first_word == static_cast<int>(w) && tok.last_word > tok.first_word) {
        out << tok.first_word + 1 << '-' << tok.last_word + 1 << '\t' << tok.text << "\t_\t_\t_\t_\t_\t_\t_\t_\n";
      }
    }
    const auto& word = sentence.words[w];
    const std::string& label = labels ? (*labels)[w] : word.deprel;
    out << word.index << '\t' << word.text << '\t' << word.text << '\t' << upos_name(word.upos) << "\t_\t_\t"
        << (word.head == kRootHead ? 0 : word.head + 1) << '\t' << label << "\t_\t_\n";
  }
  out << "\n";
}

}  // namespace

Lexicon build_lexicon(std::uint64_t seed, int vocab_size) {
  if (vocab_size < 20) throw ValidationError("vocab_size must be at least 20");
  Rng rng(mix_seed(seed, 0xC0FFEE));
  FormPool pool(rng);
  Lexicon lex;
  lex.answer_relations = {"iobj", "nmod", "nsubj", "obj", "obl"};
  const int cues = static_cast<int>(lex.answer_relations.size());
  const int names = std::max(3, vocab_size / 8);
  const int verbs = std::max(3, vocab_size / 6);
  const int adjectives = std::max(2, vocab_size / 10);
  const int adverbs = std::max(2, vocab_size / 10);
  const int pronouns = std::max(2, vocab_size / 15);
  const int nouns = vocab_size - cues - names - verbs - adjectives - adverbs - pronouns;
  lex.cues = pool.take(cues, 2, 3);
  lex.names = pool.take(names, 2, 3);
  lex.verbs = pool.take(verbs, 1, 3);
  lex.adjectives = pool.take(adjectives, 1, 3);
  lex.adverbs = pool.take(adverbs, 1, 3);
  lex.pronouns = pool.take(pronouns, 1, 2);
  lex.nouns = pool.take(nouns, 1, 3);
  lex.adpositions = pool.take(2, 1, 1);
  lex.determiners = {"the", "an"};

  std::set<std::string> pieces;
  auto add_char = [&](std::string c) {
    pieces.insert(c);
    pieces.insert("##" + c);
  };
  for (char c : kConsonants) add_char(std::string(1, c));
  for (char c : kVowels) add_char(std::string(1, c));
  add_char(std::string(kContractionMark));
  add_char(".");
  add_char("?");
  for (const auto& s : syllables()) add_char(s);
  for (const auto* list : {&lex.cues, &lex.names, &lex.verbs, &lex.adjectives, &lex.adverbs, &lex.pronouns,
                           &lex.nouns, &lex.adpositions, &lex.determiners}) {
    for (const auto& w : *list) {
      if (rng.bernoulli(0.5) || list == &lex.determiners) pieces.insert(w);
    }
  }
  lex.pieces.assign(pieces.begin(), pieces.end());
  return lex;
}

std::vector<SyntheticExample> generate_corpus(const GeneratorOptions& options, const Lexicon& lexicon,
                                              const std::string& id_prefix) {
  if (options.n_examples < 1) throw ValidationError("n_examples must be at least 1");
  if (options.min_depth < 1 || options.max_depth < options.min_depth || options.max_depth > 12) {
    throw ValidationError("infeasible depth bounds (" + std::to_string(options.min_depth) + ", " +
                          std::to_string(options.max_depth) + "): need 1 <= min <= max <= 12");
  }
  if (options.min_context_sentences < 1 || options.max_context_sentences < options.min_context_sentences) {
    throw ValidationError("infeasible context sentence bounds");
  }
  const WordPieceTokenizer tokenizer(lexicon.pieces);
  std::vector<SyntheticExample> out;
  out.reserve(options.n_examples);
  for (int k = 0; k < options.n_examples; ++k) {
    const std::uint64_t seed = mix_seed(options.seed, static_cast<std::uint64_t>(k));
    char id[64];
    std::snprintf(id, sizeof id, "%s-%05d", id_prefix.c_str(), k);
    ExampleBuilder builder(options, lexicon, seed);
    out.push_back(builder.build(id, seed, tokenizer));
  }
  return out;
}

std::string corpus_conllu(const std::vector<SyntheticExample>& examples) {
  std::ostringstream out;
  for (const auto& ex : examples) {
    out << "# newdoc id = " << ex.question.doc_id << "\n";
    for (std::size_t s = 0; s < ex.question.sentences.size(); ++s) {
      write_sentence(out, ex.question.sentences[s], nullptr, ex.question.doc_id + "-" + std::to_string(s + 1));
    }
    out << "# newdoc id = " << ex.context.doc_id << "\n";
    for (std::size_t s = 0; s < ex.context.sentences.size(); ++s) {
      write_sentence(out, ex.context.sentences[s], &ex.context_labels[s],
                     ex.context.doc_id + "-" + std::to_string(s + 1));
    }
  }
  return out.str();
}

std::string corpus_answers_jsonl(const std::vector<SyntheticExample>& examples) {
  std::ostringstream out;
  for (const auto& ex : examples) {
    nlohmann::json j;
    j["id"] = ex.id;
    j["answers"] = nlohmann::json::array();
    for (const auto& a : ex.answers) {
      j["answers"].push_back({{"text", a.text}, {"start", a.span.start}, {"end", a.span.end}});
    }
    out << j.dump() << "\n";
  }
  return out.str();
}

}  // namespace isdg::harness
