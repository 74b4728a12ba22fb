#include "isdg/ud.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

namespace isdg {
namespace {

constexpr std::array<std::string_view, kNumUpos> kUposNames = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::optional<int> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

struct PendingRow {
  UDWord word;
  int line = 0;
  int head_1based = 0;
};

struct PendingMwt {
  MwtRange range;
  std::string text;
  int line = 0;
};

// Accumulates the rows of one sentence and validates it on finish().
class SentenceBuilder {
 public:
  bool empty() const { return rows_.empty() && mwts_.empty(); }

  void set_text(std::string text) { raw_text_ = std::move(text); has_text_ = true; }

  void add_row(std::string_view line, int line_no, int sentence_no) {
    if (first_line_ == 0) first_line_ = line_no;
    auto fail = [&](const std::string& what) -> void {
      throw ConlluError(what, sentence_no, line_no);
    };
    auto cols = split(line, '\t');
    if (cols.size() != 10) {
      fail("expected 10 tab-separated columns, got " + std::to_string(cols.size()));
    }
    std::string_view id = cols[0];
    if (id.find('.') != std::string_view::npos) {
      fail("empty nodes / enhanced dependency rows are not supported (ID '" +
           std::string(id) + "')");
    }
    if (auto dash = id.find('-'); dash != std::string_view::npos) {
      auto first = parse_int(id.substr(0, dash));
      auto last = parse_int(id.substr(dash + 1));
      if (!first || !last) fail("non-numeric multi-word token ID '" + std::string(id) + "'");
      if (*last <= *first) fail("invalid multi-word token range '" + std::string(id) + "'");
      if (*first != static_cast<int>(rows_.size()) + 1) {
        fail("multi-word token range '" + std::string(id) + "' does not start at the next word");
      }
      mwts_.push_back({{*first, *last}, std::string(cols[1]), line_no});
      return;
    }
    auto index = parse_int(id);
    if (!index) fail("non-numeric ID '" + std::string(id) + "'");
    if (*index != static_cast<int>(rows_.size()) + 1) {
      fail("word ID " + std::to_string(*index) + " out of sequence, expected " +
           std::to_string(rows_.size() + 1));
    }
    PendingRow row;
    row.line = line_no;
    row.word.index = *index;
    row.word.text = std::string(cols[1]);
    auto upos = parse_upos(cols[3]);
    if (!upos) fail("unknown UPOS tag '" + std::string(cols[3]) + "'");
    row.word.upos = *upos;
    auto head = parse_int(cols[6]);
    if (!head) fail("non-numeric HEAD '" + std::string(cols[6]) + "'");
    row.head_1based = *head;
    row.word.deprel = normalize_deprel(cols[7]);
    if (row.word.deprel.empty() || row.word.deprel == "_") fail("missing DEPREL");
    rows_.push_back(std::move(row));
  }

  UDSentence finish(int sentence_no) {
    const int n = static_cast<int>(rows_.size());
    if (n == 0) {
      throw ConlluError("sentence has no words", sentence_no, first_line_);
    }
    UDSentence sentence;
    int roots = 0, root_line = 0;
    for (auto& row : rows_) {
      if (row.head_1based < 0 || row.head_1based > n) {
        throw ConlluError("head index " + std::to_string(row.head_1based) +
                              " out of range for a " + std::to_string(n) + "-word sentence",
                          sentence_no, row.line);
      }
      if (row.head_1based == row.word.index) {
        throw ConlluError("word " + std::to_string(row.word.index) + " is its own head",
                          sentence_no, row.line);
      }
      row.word.head = row.head_1based == 0 ? kRootHead : row.head_1based - 1;
      if (row.word.head == kRootHead) {
        ++roots;
        root_line = row.line;
      }
    }
    if (roots == 0) throw ConlluError("sentence has no root word", sentence_no, first_line_);
    if (roots > 1) {
      throw ConlluError("sentence has " + std::to_string(roots) + " root words", sentence_no,
                        root_line);
    }
    for (const auto& row : rows_) {
      int cur = row.word.index - 1;
      for (int steps = 0; cur != kRootHead; ++steps) {
        if (steps > n) {
          throw ConlluError("cyclic head chain through word " + std::to_string(row.word.index),
                            sentence_no, row.line);
        }
        cur = rows_[cur].word.head;
      }
    }
    for (const auto& mwt : mwts_) {
      if (mwt.range.last > n) {
        throw ConlluError("multi-word token range exceeds sentence length", sentence_no,
                          mwt.line);
      }
    }

    for (auto& row : rows_) sentence.words.push_back(std::move(row.word));
    std::size_t next_mwt = 0;
    for (int w = 0; w < n;) {
      if (next_mwt < mwts_.size() && mwts_[next_mwt].range.first == w + 1) {
        const auto& mwt = mwts_[next_mwt++];
        for (int k = mwt.range.first; k <= mwt.range.last; ++k) {
          sentence.words[k - 1].mwt_range = mwt.range;
        }
        sentence.raw_tokens.push_back({mwt.text, mwt.range.first - 1, mwt.range.last - 1, {}});
        w = mwt.range.last;
      } else {
        sentence.raw_tokens.push_back({sentence.words[w].text, w, w, {}});
        ++w;
      }
    }
    if (has_text_) {
      sentence.raw_text = raw_text_;
    } else {
      for (std::size_t t = 0; t < sentence.raw_tokens.size(); ++t) {
        if (t) sentence.raw_text += ' ';
        sentence.raw_text += sentence.raw_tokens[t].text;
      }
    }
    std::size_t cursor = 0;
    for (auto& token : sentence.raw_tokens) {
      std::size_t pos = sentence.raw_text.find(token.text, cursor);
      if (pos != std::string::npos && !token.text.empty()) {
        token.offset = pos;
        cursor = pos + token.text.size();
      }
    }
    *this = SentenceBuilder();
    return sentence;
  }

 private:
  std::vector<PendingRow> rows_;
  std::vector<PendingMwt> mwts_;
  std::string raw_text_;
  bool has_text_ = false;
  int first_line_ = 0;
};

// Returns the value of a "# key = value" comment if the key matches.
std::optional<std::string_view> comment_value(std::string_view line, std::string_view key) {
  std::string_view body = trim(line.substr(1));
  if (body.substr(0, key.size()) != key) return std::nullopt;
  body = trim(body.substr(key.size()));
  if (body.empty() || body.front() != '=') return std::nullopt;
  return trim(body.substr(1));
}

}  // namespace

std::optional<Upos> parse_upos(std::string_view tag) {
  for (int i = 0; i < kNumUpos; ++i) {
    if (kUposNames[i] == tag) return static_cast<Upos>(i);
  }
  return std::nullopt;
}

std::string_view upos_name(Upos tag) { return kUposNames[static_cast<int>(tag)]; }

int UDSentence::root() const {
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].head == kRootHead) return static_cast<int>(i);
  }
  return -1;
}

ConlluError::ConlluError(const std::string& message, int sentence, int line)
    : ValidationError("sentence " + std::to_string(sentence) + ", line " +
                      std::to_string(line) + ": " + message),
      sentence_(sentence),
      line_(line) {}

std::string normalize_deprel(std::string_view deprel) {
  return std::string(deprel.substr(0, deprel.find(':')));
}

std::vector<UDDocument> parse_conllu_documents(std::string_view text) {
  std::vector<UDDocument> docs;
  SentenceBuilder builder;
  int sentence_no = 0;  // running ordinal across the whole input
  int line_no = 0;
  bool open = false;    // a sentence has started (comment or row seen)
  auto current = [&]() -> UDDocument& {
    if (docs.empty()) docs.emplace_back();
    return docs.back();
  };
  auto begin_sentence = [&]() {
    if (!open) {
      ++sentence_no;
      open = true;
    }
  };
  auto flush = [&]() {
    if (!builder.empty()) {
      current().sentences.push_back(builder.finish(sentence_no));
    } else {
      builder = SentenceBuilder();
    }
    open = false;
  };

  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') {
      if (auto id = comment_value(line, "newdoc id"); id || trim(line.substr(1)) == "newdoc") {
        flush();
        docs.emplace_back();
        docs.back().doc_id = id ? std::string(*id) : std::string();
      } else if (auto t = comment_value(line, "text")) {
        begin_sentence();
        builder.set_text(std::string(*t));
      }
      continue;
    }
    begin_sentence();
    builder.add_row(line, line_no, sentence_no);
  }
  flush();

  std::erase_if(docs, [](const UDDocument& d) { return d.sentences.empty(); });
  if (docs.empty()) throw ConlluError("no sentences in input", 0, line_no);
  return docs;
}

UDDocument parse_conllu(std::string_view text) {
  auto docs = parse_conllu_documents(text);
  UDDocument merged;
  merged.doc_id = docs.front().doc_id;
  for (auto& d : docs) {
    for (auto& s : d.sentences) merged.sentences.push_back(std::move(s));
  }
  return merged;
}

std::string write_conllu(const UDDocument& doc) {
  std::ostringstream out;
  if (!doc.doc_id.empty()) out << "# newdoc id = " << doc.doc_id << "\n";
  for (const auto& sentence : doc.sentences) {
    out << "# text = " << sentence.raw_text << "\n";
    std::size_t t = 0;
    for (std::size_t w = 0; w < sentence.words.size(); ++w) {
      while (t < sentence.raw_tokens.size() && sentence.raw_tokens[t].last_word < static_cast<int>(w)) ++t;
      if (t < sentence.raw_tokens.size() && sentence.raw_tokens[t].first_word == static_cast<int>(w) &&
          sentence.raw_tokens[t].last_word > sentence.raw_tokens[t].first_word) {
        const auto& tok = sentence.raw_tokens[t];
        out << tok.first_word + 1 << '-' << tok.last_word + 1 << '\t' << tok.text
            << "\t_\t_\t_\t_\t_\t_\t_\t_\n";
      }
      const auto& word = sentence.words[w];
      out << word.index << '\t' << word.text << "\t_\t" << upos_name(word.upos) << "\t_\t_\t"
          << (word.head == kRootHead ? 0 : word.head + 1) << '\t' << word.deprel << "\t_\t_\n";
    }
    out << "\n";
  }
  return out.str();
}

std::vector<std::size_t> sentence_offsets(const UDDocument& doc) {
  std::vector<std::size_t> offsets;
  std::size_t pos = 0;
  for (const auto& s : doc.sentences) {
    offsets.push_back(pos);
    pos += s.raw_text.size() + 1;
  }
  return offsets;
}

std::string document_text(const UDDocument& doc) {
  std::string text;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    if (i) text += ' ';
    text += doc.sentences[i].raw_text;
  }
  return text;
}

}  // namespace isdg
