#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "isdg/errors.hpp"
#include "isdg/tokenizer.hpp"
#include "isdg/ud.hpp"

namespace isdg {

// Half-open byte range [start, end) into a raw text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool empty() const { return start == end; }
  bool intersects(const CharSpan& other) const {
    return start < other.end && other.start < end;
  }
  bool operator==(const CharSpan&) const = default;
};

class AlignmentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// One span per word of the sentence, in sentence-local offsets. Words of a
// multi-word token are partitioned when their forms tile the token exactly and
// otherwise all share the whole token's span.
std::vector<CharSpan> compute_char_spans(const UDSentence& sentence);

enum class Segment : unsigned char { kQuestion = 0, kContext = 1 };

inline constexpr int kNoWord = -1;

struct SubtokenNode {
  std::string text;
  int piece_id = 0;
  int word_ref = kNoWord;  // index into AlignedSequence::words
  CharSpan char_span;      // into question text or context text, by segment
  bool is_special = false;
};

struct NodeRange {
  int begin = 0;
  int end = 0;  // exclusive
  int size() const { return end - begin; }
  bool operator==(const NodeRange&) const = default;
};

struct AlignedWord {
  Segment segment = Segment::kContext;
  int sentence = 0;    // index into AlignedSequence::sentences
  int head = -1;       // index into AlignedSequence::words, -1 for the root
  std::string deprel;
  Upos upos = Upos::X;
  CharSpan char_span;
  NodeRange nodes;
};

struct SentenceBounds {
  Segment segment = Segment::kContext;
  NodeRange nodes;
  int root_word = 0;   // index into AlignedSequence::words
  int first_word = 0;
  int last_word = 0;   // exclusive
};

// [BOS] question [SEP] context [EOS], one node per subtoken.
struct AlignedSequence {
  std::vector<SubtokenNode> nodes;
  std::vector<Segment> segment;
  std::vector<AlignedWord> words;
  std::vector<SentenceBounds> sentences;
  std::string question_text;
  std::string context_text;
  int context_sentences_kept = 0;

  int size() const { return static_cast<int>(nodes.size()); }
  bool is_context_node(int node) const {
    return node >= 0 && node < size() && !nodes[node].is_special &&
           segment[node] == Segment::kContext;
  }
};

// Words whose pieces would exceed max_len are dropped at sentence granularity
// from the end of the context. Throws ValidationError if the question alone
// does not fit.
AlignedSequence build_aligned_sequence(const UDDocument& question, const UDDocument& context,
                                       const SubwordTokenizer& tokenizer, int max_len);

struct RecoveredAnswer {
  std::string text;
  CharSpan span;
};

RecoveredAnswer recover_answer(const AlignedSequence& seq, int start_node, int end_node,
                               std::string_view raw_context);

// First and last context node intersecting the gold span; nullopt means the
// answer is not present in the (possibly truncated) sequence.
std::optional<std::pair<int, int>> map_gold_answer(const AlignedSequence& seq,
                                                   const CharSpan& gold);

}  // namespace isdg
