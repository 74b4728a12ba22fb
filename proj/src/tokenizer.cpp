#include "isdg/tokenizer.hpp"

#include <fstream>
#include <sstream>

#include "isdg/errors.hpp"

namespace isdg {
namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: treat as a single unit
}

}  // namespace

std::string_view SubwordTokenizer::special_text(SpecialToken token) {
  switch (token) {
    case SpecialToken::kBos: return "[BOS]";
    case SpecialToken::kSep: return "[SEP]";
    case SpecialToken::kEos: return "[EOS]";
  }
  return "";
}

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> pieces)
    : pieces_(std::move(pieces)) {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].empty() || pieces_[i] == kContinuation) {
      throw ValidationError("tokenizer vocabulary line " + std::to_string(i + 1) +
                            ": empty piece");
    }
    if (!index_.emplace(pieces_[i], kFirstPieceId + static_cast<int>(i)).second) {
      throw ValidationError("tokenizer vocabulary: duplicate piece '" + pieces_[i] + "'");
    }
  }
}

WordPieceTokenizer WordPieceTokenizer::from_text(std::string_view text) {
  std::vector<std::string> pieces;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) pieces.push_back(line);
  }
  return WordPieceTokenizer(std::move(pieces));
}

WordPieceTokenizer WordPieceTokenizer::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open tokenizer vocabulary '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

std::vector<Piece> WordPieceTokenizer::tokenize(std::string_view word) const {
  // Code point boundaries of the word.
  std::vector<std::size_t> bounds{0};
  for (std::size_t i = 0; i < word.size();) {
    i = std::min(word.size(), i + utf8_length(static_cast<unsigned char>(word[i])));
    bounds.push_back(i);
  }
  std::vector<Piece> out;
  std::size_t begin = 0;  // index into bounds
  std::string key;
  while (begin + 1 < bounds.size()) {
    bool matched = false;
    for (std::size_t end = bounds.size() - 1; end > begin; --end) {
      key.clear();
      if (begin > 0) key = kContinuation;
      key.append(word.substr(bounds[begin], bounds[end] - bounds[begin]));
      if (auto it = index_.find(key); it != index_.end()) {
        out.push_back({key, it->second});
        begin = end;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw ValidationError("tokenizer: no vocabulary piece for '" +
                            std::string(word.substr(bounds[begin])) + "' in word '" +
                            std::string(word) + "'");
    }
  }
  return out;
}

std::string WordPieceTokenizer::detokenize(const std::vector<Piece>& pieces) {
  std::string out;
  for (const auto& p : pieces) {
    std::string_view t = p.text;
    if (t.substr(0, kContinuation.size()) == kContinuation) t.remove_prefix(kContinuation.size());
    out.append(t);
  }
  return out;
}

}  // namespace isdg
