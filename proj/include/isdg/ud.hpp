#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isdg/errors.hpp"

namespace isdg {

// The 17 universal part-of-speech tags.
enum class Upos : std::uint8_t {
  ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM,
  PART, PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X,
};
inline constexpr int kNumUpos = 17;

std::optional<Upos> parse_upos(std::string_view tag);
std::string_view upos_name(Upos tag);

// Head value of the root word.
inline constexpr int kRootHead = -1;

// Raw-token ids (1-based, inclusive) a word was expanded from.
struct MwtRange {
  int first = 0;
  int last = 0;
  bool operator==(const MwtRange&) const = default;
};

struct UDWord {
  int index = 0;  // 1-based position within the sentence
  std::string text;
  Upos upos = Upos::X;
  int head = kRootHead;  // 0-based word index, or kRootHead
  std::string deprel;    // main relation, subtype stripped
  std::optional<MwtRange> mwt_range;
  bool operator==(const UDWord&) const = default;
};

// A surface token: either a single word or an MWT row covering several.
struct RawToken {
  std::string text;
  int first_word = 0;  // 0-based, inclusive
  int last_word = 0;
  // Byte offset into raw_text; empty if the token could not be located.
  std::optional<std::size_t> offset;
  bool operator==(const RawToken&) const = default;
};

struct UDSentence {
  std::vector<UDWord> words;
  std::string raw_text;
  std::vector<RawToken> raw_tokens;
  int root() const;  // 0-based index of the root word
  bool operator==(const UDSentence&) const = default;
};

struct UDDocument {
  std::string doc_id;
  std::vector<UDSentence> sentences;
  bool operator==(const UDDocument&) const = default;
};

class ConlluError : public ValidationError {
 public:
  ConlluError(const std::string& message, int sentence, int line);
  int sentence() const { return sentence_; }
  int line() const { return line_; }

 private:
  int sentence_;
  int line_;
};

// Strips a relation subtype ("nsubj:pass" -> "nsubj").
std::string normalize_deprel(std::string_view deprel);

// Parses a CoNLL-U text into one document. Throws ConlluError on malformed
// rows, bad heads, zero or multiple roots, and cycles.
UDDocument parse_conllu(std::string_view text);

// Splits on "# newdoc" comments; text without any yields a single document.
std::vector<UDDocument> parse_conllu_documents(std::string_view text);

// Serializes with "# newdoc id" / "# text" comments; ignored columns are "_".
std::string write_conllu(const UDDocument& doc);

// Sentence texts joined by single spaces, as used for context char offsets.
std::string document_text(const UDDocument& doc);
std::vector<std::size_t> sentence_offsets(const UDDocument& doc);

}  // namespace isdg
