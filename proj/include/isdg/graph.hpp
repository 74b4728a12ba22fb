#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "isdg/align.hpp"

namespace isdg {

using RelationId = std::uint8_t;

enum class RelationKind : std::uint8_t {
  kNone, kSelf, kSubtoken, kCrossSentence, kCrossType, kDeprel, kReverse,
};

// Relation label vocabulary: the fixed special relations followed by a
// DEPREL / REVERSE pair per dependency label. Labels unseen when the
// vocabulary was built map to the reserved UNK pair.
class RelationVocab {
 public:
  static constexpr RelationId kNone = 0;
  static constexpr RelationId kSelf = 1;
  static constexpr RelationId kSubtoken = 2;
  static constexpr RelationId kCrossSentence = 3;
  static constexpr RelationId kCrossType = 4;
  static constexpr RelationId kUnk = 5;
  static constexpr RelationId kReverseUnk = 6;
  static constexpr int kNumSpecial = 7;
  static constexpr std::string_view kReversePrefix = "R-";

  RelationVocab();
  // Labels are normalized, deduplicated and sorted.
  static RelationVocab from_labels(const std::vector<std::string>& labels);
  // Inverse of names(); validates the layout.
  static RelationVocab from_names(const std::vector<std::string>& names);

  RelationId deprel(std::string_view label) const;
  RelationId reverse(std::string_view label) const { return reverse_of(deprel(label)); }
  RelationId reverse_of(RelationId id) const;
  RelationKind kind(RelationId id) const;

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(RelationId id) const { return names_.at(id); }
  std::vector<std::string> labels() const;

  bool operator==(const RelationVocab& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
};

// Dense relation matrix over subtoken nodes; rel(i, j) is the type from i to j.
struct ISDGraph {
  int n = 0;
  std::vector<RelationId> rel;    // row-major n*n
  std::vector<int> roots;         // canonical root node per sentence
  std::vector<int> sentence_of;   // -1 for special nodes
  std::vector<Segment> segment_of;

  RelationId at(int i, int j) const { return rel[static_cast<std::size_t>(i) * n + j]; }
  RelationId& at(int i, int j) { return rel[static_cast<std::size_t>(i) * n + j]; }
  bool is_special(int i) const { return sentence_of[i] < 0; }
  // Non-NONE targets per row.
  std::vector<std::vector<int>> adjacency() const;
};

ISDGraph build_isdg(const AlignedSequence& seq, const RelationVocab& vocab);

struct PathElement {
  enum class Kind : std::uint8_t { kNode, kRelation };
  Kind kind = Kind::kNode;
  int index = 0;  // node index or relation id
  static PathElement node(int i) { return {Kind::kNode, i}; }
  static PathElement relation(RelationId r) { return {Kind::kRelation, r}; }
  bool is_node() const { return kind == Kind::kNode; }
  bool operator==(const PathElement&) const = default;
};

using Path = std::vector<PathElement>;

// Per node: the outgoing path to its canonical root, and the incoming path
// from the root back to the node. Special nodes carry a one-element path.
struct SoftPathTable {
  std::vector<Path> out_path;
  std::vector<Path> in_path;
  int max_path_len = 0;  // 0 = untruncated
  std::size_t total_elements() const;
  bool operator==(const SoftPathTable&) const = default;
};

// Root paths are computed on the word tree; every subtoken shares its word's
// path with itself as the origin. Intermediate words are represented by their
// first subtoken.
SoftPathTable build_soft_paths(const AlignedSequence& seq, const ISDGraph& graph);

// Keeps the first max_len elements of out paths and the last max_len of in
// paths, so both stay anchored at the node itself.
SoftPathTable truncate_paths(const SoftPathTable& table, int max_len);

// tau(i, j) = out_path(i) + in_path(j).
Path soft_path(const ISDGraph& graph, const SoftPathTable& table, int i, int j);

// Reverses element order and replaces every relation by its reverse.
Path mirror_path(const Path& path, const RelationVocab& vocab);

}  // namespace isdg
