#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "isdg/graph.hpp"
#include "isdg/nn/ops.hpp"
#include "isdg/nn/params.hpp"
#include "isdg/nn/random.hpp"
#include "isdg/nn/tape.hpp"

namespace isdg {

enum class MaskMode { kLiteral, kHard };
// Ablation variants: POS features only, + local component, + local and global.
enum class Variant { kPos, kLocal, kFull };

std::string to_string(MaskMode mode);
std::string to_string(Variant variant);
MaskMode parse_mask_mode(std::string_view text);
Variant parse_variant(std::string_view text);
// Shortest round-trippable form used in config files ("%.10g").
std::string format_number(double value);

// POS embedding row used for special nodes.
inline constexpr int kSpecialUpos = kNumUpos;

struct EncoderConfig {
  int d_backbone = 64;
  int d_pos = 64;
  int d_r = 64;
  int heads_local = 4;
  int heads_global = 2;
  int max_path_len = 8;
  MaskMode mask_mode = MaskMode::kLiteral;
  int backbone_layers = 2;
  int backbone_heads = 4;
  int final_selfattn_layers = 1;
  int final_heads = 4;
  int ffn_multiplier = 2;
  int max_len = 128;
  int max_answer_len = 30;
  double dropout = 0.1;
  int piece_vocab = 0;
  int relation_vocab = 0;
  Variant variant = Variant::kFull;

  int d_x() const { return d_backbone + d_pos; }
  // Throws ValidationError naming the first violated constraint.
  void validate() const;

  // Flat key=value form; every field is present.
  std::map<std::string, std::string> to_map() const;
  // Applies known keys; unknown keys are a ValidationError.
  void apply(const std::map<std::string, std::string>& values);

  bool operator==(const EncoderConfig&) const = default;
};

// Everything the model reads from one preprocessed example.
struct ModelInput {
  int n = 0;
  std::vector<int> piece_ids;
  std::vector<int> segment;  // 0 question side, 1 context side
  std::vector<int> upos;     // kSpecialUpos for special nodes
  std::vector<RelationId> rel;
  SoftPathTable paths;       // already truncated
  std::vector<std::uint8_t> answerable;  // context, non-special nodes
};

// paths must already be truncated to the model's max_path_len.
ModelInput make_model_input(const AlignedSequence& seq, const ISDGraph& graph,
                            const SoftPathTable& paths);

// Declares every parameter group used by the configured variant.
template <typename T>
void declare_parameters(nn::ModelState<T>& state, const EncoderConfig& config);

// Binds parameter groups to a tape on first use.
template <typename T>
class Bound {
 public:
  Bound(nn::Tape<T>& tape, nn::ModelState<T>& state) : tape_(tape), state_(state) {}
  nn::Var operator()(const std::string& name);
  nn::Tape<T>& tape() { return tape_; }

 private:
  nn::Tape<T>& tape_;
  nn::ModelState<T>& state_;
  std::unordered_map<std::string, nn::Var> cache_;
};

// Dropout is active only when train is set and rng is provided.
struct PassOptions {
  bool train = false;
  nn::Rng* rng = nullptr;
};

template <typename T>
nn::RelationIndexPtr relation_index(const EncoderConfig& config, const ModelInput& input);

// Embedding sum through the vanilla layers, then the POS embedding
// concatenated on the right: [n, d_x].
template <typename T>
nn::Var backbone_forward(Bound<T>& p, const EncoderConfig& config, const ModelInput& input,
                         const PassOptions& options, std::vector<nn::Var>* alphas = nullptr);

struct AttentionResult {
  nn::Var z;                   // heads concatenated, before the output projection
  std::vector<nn::Var> alpha;  // one [n, n] matrix per head
};

template <typename T>
AttentionResult local_attention(Bound<T>& p, const EncoderConfig& config, nn::Var x,
                                const nn::RelationIndexPtr& rel, const PassOptions& options);

struct PathEncoding {
  nn::Var g_out;  // last state over each node's outgoing path
  nn::Var g_in;   // last state over each node's incoming path
};

template <typename T>
PathEncoding encode_paths(Bound<T>& p, const EncoderConfig& config, nn::Var x,
                          const SoftPathTable& paths);

template <typename T>
AttentionResult global_attention(Bound<T>& p, const EncoderConfig& config, nn::Var g_out,
                                 nn::Var g_in, const PassOptions& options);

struct LayerTrace {
  std::vector<nn::Var> alpha_backbone;
  std::vector<nn::Var> alpha_local;
  std::vector<nn::Var> alpha_global;
  std::vector<nn::Var> alpha_final;
  nn::Var z_local;   // after the local output projection
  nn::Var z_global;  // after the global output projection
  nn::Var fused;     // before the final self-attention layers
};

// Local and global outputs fused per variant, then the final vanilla layers.
// Returns [n, d_x].
template <typename T>
nn::Var isdg_layer(Bound<T>& p, const EncoderConfig& config, nn::Var x, const ModelInput& input,
                   const PassOptions& options, LayerTrace* trace = nullptr);

template <typename T>
nn::Var vanilla_layer(Bound<T>& p, const std::string& prefix, int heads, nn::Var x,
                      double dropout, const PassOptions& options, std::vector<nn::Var>* alphas);

struct Gold {
  int start = 0;
  int end = 0;
};

struct SpanScores {
  nn::Var start_logits;  // [n, 1]
  nn::Var end_logits;
  std::optional<nn::Var> loss;
};

template <typename T>
SpanScores span_head(Bound<T>& p, nn::Var z, const std::optional<Gold>& gold);

struct SpanPrediction {
  int start = -1;
  int end = -1;
  double score = 0;
};

// Maximizes p_start[s] + p_end[e] over answerable s <= e with e - s < max_len.
// Ties keep the smallest (s, e) in lexicographic order.
SpanPrediction decode_span(const std::vector<double>& p_start, const std::vector<double>& p_end,
                           const std::vector<std::uint8_t>& answerable, int max_answer_len);

std::vector<double> softmax_column(const std::vector<double>& logits);

struct AttentionDistance {
  std::vector<std::vector<int>> argmax;    // [head][node]
  std::vector<std::vector<int>> distance;  // [head][node]
  double mean = 0;
};

// D_i = |i - argmax_j alpha_ij| with ties at the smallest j.
template <typename T>
AttentionDistance attention_distance(const std::vector<nn::Tensor<T>>& alpha);

struct ModelOutput {
  std::vector<double> p_start;
  std::vector<double> p_end;
  std::vector<nn::Tensor<double>> alpha_local;
  std::vector<nn::Tensor<double>> alpha_global;
  std::optional<double> loss;
};

template <typename T>
class Model {
 public:
  explicit Model(EncoderConfig config);

  const EncoderConfig& config() const { return config_; }
  nn::ModelState<T>& state() { return state_; }
  const nn::ModelState<T>& state() const { return state_; }
  void initialize(std::uint64_t seed);

  // Records a full pass on the tape and returns the loss variable when gold
  // is given.
  std::optional<nn::Var> record(nn::Tape<T>& tape, const ModelInput& input,
                                const std::optional<Gold>& gold, const PassOptions& options,
                                SpanScores* scores = nullptr, LayerTrace* trace = nullptr);

  // Inference pass without dropout.
  ModelOutput forward(const ModelInput& input, const std::optional<Gold>& gold = std::nullopt);
  SpanPrediction predict(const ModelInput& input);

 private:
  EncoderConfig config_;
  nn::ModelState<T> state_;
};

}  // namespace isdg
