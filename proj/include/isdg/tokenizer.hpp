#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace isdg {

struct Piece {
  std::string text;  // continuation pieces keep their "##" prefix
  int id = 0;
  bool operator==(const Piece&) const = default;
};

enum class SpecialToken { kBos = 0, kSep = 1, kEos = 2 };

// Pluggable subword tokenizer. Special tokens always occupy ids 0..2.
class SubwordTokenizer {
 public:
  virtual ~SubwordTokenizer() = default;
  virtual std::vector<Piece> tokenize(std::string_view word) const = 0;
  virtual int vocab_size() const = 0;
  int special_id(SpecialToken token) const { return static_cast<int>(token); }
  static std::string_view special_text(SpecialToken token);
};

// Greedy longest-match-first wordpiece tokenizer. Matching advances by whole
// UTF-8 code points; a character missing from the vocabulary is an error.
class WordPieceTokenizer final : public SubwordTokenizer {
 public:
  static constexpr std::string_view kContinuation = "##";
  static constexpr int kFirstPieceId = 3;

  explicit WordPieceTokenizer(std::vector<std::string> pieces);
  // One piece per line; blank lines are skipped.
  static WordPieceTokenizer from_text(std::string_view text);
  static WordPieceTokenizer from_file(const std::string& path);

  std::vector<Piece> tokenize(std::string_view word) const override;
  int vocab_size() const override { return kFirstPieceId + static_cast<int>(pieces_.size()); }
  const std::vector<std::string>& pieces() const { return pieces_; }

  // Inverse of tokenize: strips markers and concatenates.
  static std::string detokenize(const std::vector<Piece>& pieces);

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace isdg
