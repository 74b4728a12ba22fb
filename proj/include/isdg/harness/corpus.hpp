#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isdg/align.hpp"
#include "isdg/tokenizer.hpp"
#include "isdg/ud.hpp"

namespace isdg::harness {

struct GeneratorOptions {
  std::uint64_t seed = 7;
  int n_examples = 1;
  int vocab_size = 60;  // content words in the lexicon, at least 20
  int min_depth = 1;
  int max_depth = 4;
  int min_context_sentences = 1;
  int max_context_sentences = 5;
  double mwt_probability = 0.1;  // per context sentence
  int max_nodes = 96;            // trailing distractor sentences are dropped to fit
};

struct GoldAnswer {
  std::string text;
  CharSpan span;  // into the context document text
  bool operator==(const GoldAnswer&) const = default;
};

struct SyntheticExample {
  std::string id;
  UDDocument question;
  UDDocument context;
  std::vector<GoldAnswer> answers;
  // Context relation labels as written to CoNLL-U, possibly with subtypes.
  std::vector<std::vector<std::string>> context_labels;
  std::uint64_t generator_seed = 0;
  bool has_mwt = false;
  bool has_non_tiling_mwt = false;
};

struct Lexicon {
  std::vector<std::string> nouns, verbs, adjectives, adverbs, pronouns, adpositions, names;
  std::vector<std::string> determiners;  // the articles
  std::vector<std::string> answer_relations;
  std::vector<std::string> cues;  // cues[k] asks for answer_relations[k]
  // Wordpiece vocabulary covering every form the generator can emit.
  std::vector<std::string> pieces;
};

Lexicon build_lexicon(std::uint64_t seed, int vocab_size);

// Deterministic in the options. Throws ValidationError on infeasible bounds.
std::vector<SyntheticExample> generate_corpus(const GeneratorOptions& options, const Lexicon& lexicon,
                                              const std::string& id_prefix);

// Question and context documents of every example, as "<id>.q" / "<id>.c".
std::string corpus_conllu(const std::vector<SyntheticExample>& examples);
// One JSON object per line: {"id", "answers": [{"text", "start", "end"}]}.
std::string corpus_answers_jsonl(const std::vector<SyntheticExample>& examples);

}  // namespace isdg::harness
