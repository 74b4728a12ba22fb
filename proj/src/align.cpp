#include "isdg/align.hpp"

namespace isdg {

std::vector<CharSpan> compute_char_spans(const UDSentence& sentence) {
  std::vector<CharSpan> spans(sentence.words.size());
  std::vector<bool> covered(sentence.words.size(), false);
  std::size_t cursor = 0;
  for (const auto& token : sentence.raw_tokens) {
    std::size_t pos =
        token.text.empty() ? std::string::npos : sentence.raw_text.find(token.text, cursor);
    if (pos == std::string::npos) {
      const auto& word = sentence.words.at(token.first_word);
      throw AlignmentError("cannot locate word '" + word.text + "' (index " +
                           std::to_string(word.index) + ") in sentence \"" +
                           sentence.raw_text + "\"");
    }
    const CharSpan whole{pos, pos + token.text.size()};
    cursor = whole.end;
    if (token.first_word == token.last_word) {
      spans[token.first_word] = whole;
      covered[token.first_word] = true;
      continue;
    }
    std::string joined;
    for (int w = token.first_word; w <= token.last_word; ++w) joined += sentence.words[w].text;
    std::size_t offset = pos;
    for (int w = token.first_word; w <= token.last_word; ++w) {
      if (joined == token.text) {
        spans[w] = {offset, offset + sentence.words[w].text.size()};
        offset = spans[w].end;
      } else {
        spans[w] = whole;
      }
      covered[w] = true;
    }
  }
  for (std::size_t w = 0; w < covered.size(); ++w) {
    if (!covered[w]) {
      throw AlignmentError("word '" + sentence.words[w].text + "' (index " +
                           std::to_string(sentence.words[w].index) +
                           ") is not covered by any raw token in sentence \"" +
                           sentence.raw_text + "\"");
    }
  }
  return spans;
}

namespace {

struct SentencePieces {
  std::vector<std::vector<Piece>> words;
  std::vector<CharSpan> spans;
  int count = 0;
};

SentencePieces tokenize_sentence(const UDSentence& sentence, const SubwordTokenizer& tokenizer,
                                 std::size_t text_offset) {
  SentencePieces out;
  out.spans = compute_char_spans(sentence);
  for (auto& span : out.spans) {
    span.start += text_offset;
    span.end += text_offset;
  }
  for (const auto& word : sentence.words) {
    out.words.push_back(tokenizer.tokenize(word.text));
    if (out.words.back().empty()) {
      throw AlignmentError("word " + std::to_string(word.index) + " tokenizes to nothing");
    }
    out.count += static_cast<int>(out.words.back().size());
  }
  return out;
}

void append_special(AlignedSequence& seq, const SubwordTokenizer& tokenizer, SpecialToken token,
                    Segment segment) {
  SubtokenNode node;
  node.text = std::string(SubwordTokenizer::special_text(token));
  node.piece_id = tokenizer.special_id(token);
  node.is_special = true;
  seq.nodes.push_back(std::move(node));
  seq.segment.push_back(segment);
}

void append_sentence(AlignedSequence& seq, const UDSentence& sentence, const SentencePieces& p,
                     Segment segment) {
  SentenceBounds bounds;
  bounds.segment = segment;
  bounds.nodes.begin = seq.size();
  bounds.first_word = static_cast<int>(seq.words.size());
  const int sentence_index = static_cast<int>(seq.sentences.size());
  for (std::size_t w = 0; w < sentence.words.size(); ++w) {
    const auto& src = sentence.words[w];
    AlignedWord word;
    word.segment = segment;
    word.sentence = sentence_index;
    word.head = src.head == kRootHead ? -1 : bounds.first_word + src.head;
    word.deprel = src.deprel;
    word.upos = src.upos;
    word.char_span = p.spans[w];
    word.nodes.begin = seq.size();
    const int word_index = static_cast<int>(seq.words.size());
    for (const auto& piece : p.words[w]) {
      SubtokenNode node;
      node.text = piece.text;
      node.piece_id = piece.id;
      node.word_ref = word_index;
      node.char_span = p.spans[w];
      seq.nodes.push_back(std::move(node));
      seq.segment.push_back(segment);
    }
    word.nodes.end = seq.size();
    if (src.head == kRootHead) bounds.root_word = word_index;
    seq.words.push_back(std::move(word));
  }
  bounds.last_word = static_cast<int>(seq.words.size());
  bounds.nodes.end = seq.size();
  seq.sentences.push_back(bounds);
}

}  // namespace

AlignedSequence build_aligned_sequence(const UDDocument& question, const UDDocument& context,
                                       const SubwordTokenizer& tokenizer, int max_len) {
  AlignedSequence seq;
  seq.question_text = document_text(question);
  seq.context_text = document_text(context);

  const auto q_offsets = sentence_offsets(question);
  const auto c_offsets = sentence_offsets(context);
  std::vector<SentencePieces> q_pieces, c_pieces;
  int q_count = 0;
  for (std::size_t s = 0; s < question.sentences.size(); ++s) {
    q_pieces.push_back(tokenize_sentence(question.sentences[s], tokenizer, q_offsets[s]));
    q_count += q_pieces.back().count;
  }
  // BOS, SEP, EOS
  if (q_count + 3 > max_len) {
    throw ValidationError("question needs " + std::to_string(q_count + 3) +
                          " nodes, exceeding max_len " + std::to_string(max_len));
  }

  append_special(seq, tokenizer, SpecialToken::kBos, Segment::kQuestion);
  for (std::size_t s = 0; s < question.sentences.size(); ++s) {
    append_sentence(seq, question.sentences[s], q_pieces[s], Segment::kQuestion);
  }
  append_special(seq, tokenizer, SpecialToken::kSep, Segment::kQuestion);

  int budget = max_len - q_count - 3;
  for (std::size_t s = 0; s < context.sentences.size(); ++s) {
    auto pieces = tokenize_sentence(context.sentences[s], tokenizer, c_offsets[s]);
    if (pieces.count > budget) break;
    budget -= pieces.count;
    append_sentence(seq, context.sentences[s], pieces, Segment::kContext);
    ++seq.context_sentences_kept;
  }
  append_special(seq, tokenizer, SpecialToken::kEos, Segment::kContext);
  return seq;
}

RecoveredAnswer recover_answer(const AlignedSequence& seq, int start_node, int end_node,
                               std::string_view raw_context) {
  for (int node : {start_node, end_node}) {
    if (!seq.is_context_node(node)) {
      throw ValidationError("answer node " + std::to_string(node) +
                            " is not a context subtoken");
    }
  }
  if (start_node > end_node) {
    throw ValidationError("answer start node " + std::to_string(start_node) +
                          " is after end node " + std::to_string(end_node));
  }
  CharSpan span{seq.nodes[start_node].char_span.start, seq.nodes[end_node].char_span.end};
  if (span.end < span.start || span.end > raw_context.size()) {
    throw ValidationError("answer span exceeds the context text");
  }
  return {std::string(raw_context.substr(span.start, span.end - span.start)), span};
}

std::optional<std::pair<int, int>> map_gold_answer(const AlignedSequence& seq,
                                                   const CharSpan& gold) {
  int first = -1, last = -1;
  for (int i = 0; i < seq.size(); ++i) {
    if (!seq.is_context_node(i) || !seq.nodes[i].char_span.intersects(gold)) continue;
    if (first < 0) first = i;
    last = i;
  }
  if (first < 0) return std::nullopt;
  return std::make_pair(first, last);
}

}  // namespace isdg
