#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "isdg/encoder.hpp"
#include "isdg/graph.hpp"
#include "isdg/harness/corpus.hpp"

namespace isdg::harness {

struct NodeRecord {
  std::string text;
  int piece_id = 0;
  int word = kNoWord;
  int upos = kSpecialUpos;
  int segment = 0;
  bool special = false;
  bool operator==(const NodeRecord&) const = default;
};

// One preprocessed example. Path elements are serialized as integers: a node
// index i >= 0 as i, a relation id r as -(r + 1).
struct Record {
  std::string id;
  std::vector<NodeRecord> nodes;
  std::vector<RelationId> rel;
  std::vector<std::string> relation_vocab;
  std::vector<int> roots;
  SoftPathTable paths;
  int gold_start = -1;  // -1 when the answer did not survive truncation
  int gold_end = -1;
  std::vector<CharSpan> char_spans;
  std::string context_text;
  std::vector<GoldAnswer> answers;

  int n() const { return static_cast<int>(nodes.size()); }
  bool has_gold() const { return gold_start >= 0; }
  ModelInput to_input() const;
  std::vector<std::string> answer_texts() const;
  // Context text from the start of start_node's span to the end of end_node's.
  std::string span_text(int start_node, int end_node) const;
  bool operator==(const Record&) const = default;
};

std::string record_to_line(const Record& record);
Record record_from_line(std::string_view line);

std::vector<Record> read_records(const std::string& path);
void write_records(const std::string& path, const std::vector<Record>& records);

struct PreprocessOptions {
  int max_len = 128;
  int max_path_len = 8;
};

Record make_record(const std::string& id, const UDDocument& question, const UDDocument& context,
                   const std::vector<GoldAnswer>& answers, const SubwordTokenizer& tokenizer,
                   const RelationVocab& vocab, const PreprocessOptions& options);

struct Pair {
  std::string id;
  UDDocument question;
  UDDocument context;
  std::vector<GoldAnswer> answers;
};

// Pairs "<id>.q" / "<id>.c" documents with their answers.
std::vector<Pair> pair_documents(std::string_view conllu_text, std::string_view answers_jsonl);

struct PreprocessResult {
  std::vector<Record> records;
  int skipped = 0;  // answer lost to truncation
};

// Runs make_record over all pairs, in parallel, in input order. Pairs whose
// answer is truncated away are skipped when skip_unanswerable is set.
PreprocessResult preprocess_pairs(const std::vector<Pair>& pairs, const SubwordTokenizer& tokenizer,
                                  const RelationVocab& vocab, const PreprocessOptions& options,
                                  bool skip_unanswerable);

RelationVocab vocab_from_pairs(const std::vector<Pair>& pairs);

// Human-readable difference between two relation vocabularies; empty if equal.
std::string vocab_diff(const std::vector<std::string>& expected, const std::vector<std::string>& actual);

}  // namespace isdg::harness
