#include "isdg/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include "isdg/errors.hpp"
#include "isdg/nn/lstm.hpp"

namespace isdg {

using nn::InitSpec;
using nn::Var;

std::string to_string(MaskMode mode) { return mode == MaskMode::kHard ? "hard" : "literal"; }

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kPos: return "pos";
    case Variant::kLocal: return "local";
    case Variant::kFull: return "full";
  }
  return "full";
}

MaskMode parse_mask_mode(std::string_view text) {
  if (text == "literal" || text == "LITERAL") return MaskMode::kLiteral;
  if (text == "hard" || text == "HARD") return MaskMode::kHard;
  throw ValidationError("unknown mask mode '" + std::string(text) + "' (expected literal or hard)");
}

Variant parse_variant(std::string_view text) {
  if (text == "pos") return Variant::kPos;
  if (text == "local") return Variant::kLocal;
  if (text == "full") return Variant::kFull;
  throw ValidationError("unknown variant '" + std::string(text) + "' (expected pos, local or full)");
}

void EncoderConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("invalid config: " + what); };
  if (d_backbone < 1) fail("d_backbone must be positive");
  if (d_pos < 0) fail("d_pos must be non-negative");
  if (d_r < 1 || d_r >= d_x()) fail("d_r must satisfy 1 <= d_r < d_x");
  if (heads_local < 1 || d_x() % heads_local) fail("d_x must be divisible by heads_local");
  if (heads_global < 1 || d_x() % heads_global) fail("d_x must be divisible by heads_global");
  if (final_heads < 1 || d_x() % final_heads) fail("d_x must be divisible by final_heads");
  if (backbone_heads < 1 || d_backbone % backbone_heads) fail("d_backbone must be divisible by backbone_heads");
  if (max_path_len < 1) fail("max_path_len must be at least 1");
  if (backbone_layers < 0 || final_selfattn_layers < 0) fail("layer counts must be non-negative");
  if (ffn_multiplier < 1) fail("ffn_multiplier must be positive");
  if (max_len < 4) fail("max_len must be at least 4");
  if (max_answer_len < 1) fail("max_answer_len must be positive");
  if (dropout < 0 || dropout >= 1) fail("dropout must be in [0, 1)");
  if (piece_vocab < 4) fail("piece_vocab must cover the special tokens and one piece");
  if (relation_vocab < RelationVocab::kNumSpecial || relation_vocab > 256) {
    fail("relation_vocab must be in [" + std::to_string(RelationVocab::kNumSpecial) + ", 256]");
  }
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::map<std::string, std::string> EncoderConfig::to_map() const {
  return {
      {"d_backbone", std::to_string(d_backbone)},
      {"d_pos", std::to_string(d_pos)},
      {"d_r", std::to_string(d_r)},
      {"heads_local", std::to_string(heads_local)},
      {"heads_global", std::to_string(heads_global)},
      {"max_path_len", std::to_string(max_path_len)},
      {"mask_mode", to_string(mask_mode)},
      {"backbone_layers", std::to_string(backbone_layers)},
      {"backbone_heads", std::to_string(backbone_heads)},
      {"final_selfattn_layers", std::to_string(final_selfattn_layers)},
      {"final_heads", std::to_string(final_heads)},
      {"ffn_multiplier", std::to_string(ffn_multiplier)},
      {"max_len", std::to_string(max_len)},
      {"max_answer_len", std::to_string(max_answer_len)},
      {"dropout", format_number(dropout)},
      {"piece_vocab", std::to_string(piece_vocab)},
      {"relation_vocab", std::to_string(relation_vocab)},
      {"variant", to_string(variant)},
  };
}

namespace {

int parse_int(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0') throw ValidationError("config key " + key + ": not an integer: " + text);
  return static_cast<int>(v);
}

double parse_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') throw ValidationError("config key " + key + ": not a number: " + text);
  return v;
}

}  // namespace

void EncoderConfig::apply(const std::map<std::string, std::string>& values) {
  EncoderConfig next = *this;
  const std::map<std::string, int*> ints = {
      {"d_backbone", &next.d_backbone},
      {"d_pos", &next.d_pos},
      {"d_r", &next.d_r},
      {"heads_local", &next.heads_local},
      {"heads_global", &next.heads_global},
      {"max_path_len", &next.max_path_len},
      {"backbone_layers", &next.backbone_layers},
      {"backbone_heads", &next.backbone_heads},
      {"final_selfattn_layers", &next.final_selfattn_layers},
      {"final_heads", &next.final_heads},
      {"ffn_multiplier", &next.ffn_multiplier},
      {"max_len", &next.max_len},
      {"max_answer_len", &next.max_answer_len},
      {"piece_vocab", &next.piece_vocab},
      {"relation_vocab", &next.relation_vocab},
  };
  for (const auto& [key, value] : values) {
    if (auto it = ints.find(key); it != ints.end()) {
      *it->second = parse_int(key, value);
    } else if (key == "dropout") {
      next.dropout = parse_double(key, value);
    } else if (key == "mask_mode") {
      next.mask_mode = parse_mask_mode(value);
    } else if (key == "variant") {
      next.variant = parse_variant(value);
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  *this = next;
}

ModelInput make_model_input(const AlignedSequence& seq, const ISDGraph& graph, const SoftPathTable& paths) {
  ModelInput input;
  input.n = seq.size();
  if (graph.n != input.n || static_cast<int>(paths.out_path.size()) != input.n) {
    throw std::invalid_argument("make_model_input: graph, paths and sequence disagree on node count");
  }
  for (int i = 0; i < input.n; ++i) {
    const auto& node = seq.nodes[i];
    input.piece_ids.push_back(node.piece_id);
    input.segment.push_back(seq.segment[i] == Segment::kContext ? 1 : 0);
    input.upos.push_back(node.is_special ? kSpecialUpos : static_cast<int>(seq.words[node.word_ref].upos));
    input.answerable.push_back(seq.is_context_node(i) ? 1 : 0);
  }
  input.rel = graph.rel;
  input.paths = paths;
  return input;
}

template <typename T>
void declare_parameters(nn::ModelState<T>& state, const EncoderConfig& c) {
  c.validate();
  const int dx = c.d_x();
  const auto emb = InitSpec::uniform(0.05);
  state.add("embed.piece", c.piece_vocab, c.d_backbone, emb);
  state.add("embed.position", c.max_len, c.d_backbone, emb);
  state.add("embed.segment", 2, c.d_backbone, emb);
  state.add("embed.pos", kNumUpos + 1, c.d_pos, emb);

  auto vanilla = [&](const std::string& prefix, int d) {
    for (const char* w : {".wq", ".wk", ".wv", ".wo"}) state.add(prefix + w, d, d, InitSpec::fan_in());
    state.add(prefix + ".bo", 1, d, InitSpec::zeros());
    state.add(prefix + ".ln1.gain", 1, d, InitSpec::constant(1.0));
    state.add(prefix + ".ln1.bias", 1, d, InitSpec::zeros());
    state.add(prefix + ".ffn.w1", d, c.ffn_multiplier * d, InitSpec::fan_in());
    state.add(prefix + ".ffn.b1", 1, c.ffn_multiplier * d, InitSpec::zeros());
    state.add(prefix + ".ffn.w2", c.ffn_multiplier * d, d, InitSpec::fan_in());
    state.add(prefix + ".ffn.b2", 1, d, InitSpec::zeros());
    state.add(prefix + ".ln2.gain", 1, d, InitSpec::constant(1.0));
    state.add(prefix + ".ln2.bias", 1, d, InitSpec::zeros());
  };
  for (int l = 0; l < c.backbone_layers; ++l) vanilla("backbone." + std::to_string(l), c.d_backbone);

  if (c.variant != Variant::kPos) {
    const int dh = dx / c.heads_local;
    state.add("relation.embed", c.relation_vocab, c.d_r, emb);
    for (const char* w : {"local.wq", "local.wk", "local.wv", "local.wo"}) state.add(w, dx, dx, InitSpec::fan_in());
    state.add("local.bo", 1, dx, InitSpec::zeros());
    state.add("local.wrq", c.d_r, dh, InitSpec::fan_in());
    state.add("local.wrk", c.d_r, dh, InitSpec::fan_in());
    state.add("local.wrv", c.d_r, dx, InitSpec::fan_in());
  }
  if (c.variant == Variant::kFull) {
    state.add("paths.rel_proj", c.d_r, dx, InitSpec::fan_in());
    nn::add_lstm(state, "paths.out", dx, dx);
    nn::add_lstm(state, "paths.in", dx, dx);
    for (const char* w : {"global.wq", "global.wk", "global.wv", "global.wo"}) {
      state.add(w, dx, dx, InitSpec::fan_in());
    }
    state.add("global.bo", 1, dx, InitSpec::zeros());
  }
  if (c.variant != Variant::kPos) {
    state.add("fusion.w", c.variant == Variant::kFull ? 2 * dx : dx, dx, InitSpec::fan_in());
    state.add("fusion.b", 1, dx, InitSpec::zeros());
  }
  for (int l = 0; l < c.final_selfattn_layers; ++l) vanilla("final." + std::to_string(l), dx);
  state.add("span.start.w", dx, 1, InitSpec::fan_in());
  state.add("span.start.b", 1, 1, InitSpec::zeros());
  state.add("span.end.w", dx, 1, InitSpec::fan_in());
  state.add("span.end.b", 1, 1, InitSpec::zeros());
}

template <typename T>
Var Bound<T>::operator()(const std::string& name) {
  if (auto it = cache_.find(name); it != cache_.end()) return it->second;
  Var v = tape_.parameter(state_.get(name));
  cache_.emplace(name, v);
  return v;
}

namespace {

template <typename T>
Var maybe_dropout(nn::Tape<T>& t, Var x, double p, const PassOptions& options) {
  if (!options.train || options.rng == nullptr || p <= 0) return x;
  return nn::dropout(t, x, p, *options.rng);
}

template <typename T>
Var affine(Bound<T>& p, Var x, const std::string& w, const std::string& b) {
  return nn::add_row(p.tape(), nn::matmul(p.tape(), x, p(w)), p(b));
}

std::vector<int> iota_rows(int n) {
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

template <typename T>
nn::RelationIndexPtr relation_index(const EncoderConfig& config, const ModelInput& input) {
  auto rel = std::make_shared<nn::RelationIndex>();
  rel->n = input.n;
  rel->num_relations = config.relation_vocab;
  rel->ids = input.rel;
  if (rel->ids.size() != static_cast<std::size_t>(input.n) * input.n) {
    throw ValidationError("relation matrix size does not match node count");
  }
  for (RelationId r : rel->ids) {
    if (r >= config.relation_vocab) {
      throw ValidationError("relation id " + std::to_string(r) + " outside the configured vocabulary of " +
                            std::to_string(config.relation_vocab));
    }
  }
  return rel;
}

template <typename T>
Var vanilla_layer(Bound<T>& p, const std::string& prefix, int heads, Var x, double dropout,
                  const PassOptions& options, std::vector<Var>* alphas) {
  auto& t = p.tape();
  const int d = t.value(x).cols();
  const int dh = d / heads;
  Var q = nn::matmul(t, x, p(prefix + ".wq"));
  Var k = nn::matmul(t, x, p(prefix + ".wk"));
  Var v = nn::matmul(t, x, p(prefix + ".wv"));
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    Var qh = nn::slice_cols(t, q, h * dh, dh);
    Var kh = nn::slice_cols(t, k, h * dh, dh);
    Var vh = nn::slice_cols(t, v, h * dh, dh);
    Var alpha = nn::softmax_rows(t, nn::matmul_nt(t, qh, kh), static_cast<T>(1.0 / std::sqrt(double(dh))));
    if (alphas) alphas->push_back(alpha);
    alpha = maybe_dropout(t, alpha, dropout, options);
    outs.push_back(nn::matmul(t, alpha, vh));
  }
  Var attn = affine(p, heads == 1 ? outs[0] : nn::concat_cols(t, outs), prefix + ".wo", prefix + ".bo");
  Var h1 = nn::layer_norm(t, nn::add(t, x, maybe_dropout(t, attn, dropout, options)), p(prefix + ".ln1.gain"),
                          p(prefix + ".ln1.bias"));
  Var f = affine(p, nn::gelu(t, affine(p, h1, prefix + ".ffn.w1", prefix + ".ffn.b1")), prefix + ".ffn.w2",
                 prefix + ".ffn.b2");
  return nn::layer_norm(t, nn::add(t, h1, maybe_dropout(t, f, dropout, options)), p(prefix + ".ln2.gain"),
                        p(prefix + ".ln2.bias"));
}

template <typename T>
Var backbone_forward(Bound<T>& p, const EncoderConfig& c, const ModelInput& input, const PassOptions& options,
                     std::vector<Var>* alphas) {
  auto& t = p.tape();
  if (input.n < 1) throw ValidationError("empty input sequence");
  if (input.n > c.max_len) {
    throw ValidationError("sequence of " + std::to_string(input.n) + " nodes exceeds max_len " +
                          std::to_string(c.max_len));
  }
  for (int id : input.piece_ids) {
    if (id < 0 || id >= c.piece_vocab) {
      throw ValidationError("piece id " + std::to_string(id) + " outside the vocabulary of " +
                            std::to_string(c.piece_vocab));
    }
  }
  Var e = nn::add(t, nn::gather_rows(t, p("embed.piece"), input.piece_ids),
                  nn::gather_rows(t, p("embed.position"), iota_rows(input.n)));
  e = nn::add(t, e, nn::gather_rows(t, p("embed.segment"), input.segment));
  Var h = maybe_dropout(t, e, c.dropout, options);
  for (int l = 0; l < c.backbone_layers; ++l) {
    h = vanilla_layer(p, "backbone." + std::to_string(l), c.backbone_heads, h, c.dropout, options, alphas);
  }
  if (c.d_pos == 0) return h;
  Var pos = nn::gather_rows(t, p("embed.pos"), input.upos);
  return nn::concat_cols(t, {h, maybe_dropout(t, pos, c.dropout, options)});
}

template <typename T>
AttentionResult local_attention(Bound<T>& p, const EncoderConfig& c, Var x, const nn::RelationIndexPtr& rel,
                                const PassOptions& options) {
  auto& t = p.tape();
  const int n = rel->n;
  const int dx = c.d_x();
  const int heads = c.heads_local;
  const int dh = dx / heads;
  if (t.value(x).rows() != n || t.value(x).cols() != dx) {
    throw std::invalid_argument("local_attention: node states " +
                                nn::shape_string(t.value(x).rows(), t.value(x).cols()) + " vs " +
                                nn::shape_string(n, dx));
  }
  Var q = nn::matmul(t, x, p("local.wq"));
  Var k = nn::matmul(t, x, p("local.wk"));
  Var v = nn::matmul(t, x, p("local.wv"));
  Var r = p("relation.embed");
  Var rq = nn::matmul(t, r, p("local.wrq"));  // [R, dh]
  Var rk = nn::matmul(t, r, p("local.wrk"));  // [R, dh]
  Var rv = nn::matmul(t, r, p("local.wrv"));  // [R, dx]
  Var rr = nn::matmul_nt(t, rq, rk);          // term (d) table, [R, R]

  std::vector<std::uint8_t> keep(rel->ids.size());
  nn::Tensor<T> mask(n, n);
  for (std::size_t idx = 0; idx < keep.size(); ++idx) {
    keep[idx] = rel->ids[idx] != RelationVocab::kNone;
    mask[idx] = keep[idx] ? T(1) : T(0);
  }
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dx)));
  Var term_d = nn::relation_gather_pair(t, rr, rel);

  AttentionResult result;
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    Var qh = nn::slice_cols(t, q, h * dh, dh);
    Var kh = nn::slice_cols(t, k, h * dh, dh);
    Var vh = nn::slice_cols(t, v, h * dh, dh);
    Var e = nn::matmul_nt(t, qh, kh);
    e = nn::add(t, e, nn::relation_gather_reverse(t, nn::matmul_nt(t, qh, rk), rel));
    e = nn::add(t, e, nn::relation_gather_forward(t, nn::matmul_nt(t, kh, rq), rel));
    e = nn::add(t, e, term_d);
    Var alpha;
    if (c.mask_mode == MaskMode::kLiteral) {
      alpha = nn::softmax_rows(t, nn::mul_const(t, e, mask), scale);
    } else {
      alpha = nn::softmax_rows(t, e, scale, keep);
    }
    result.alpha.push_back(alpha);
    alpha = maybe_dropout(t, alpha, c.dropout, options);
    Var values = nn::matmul(t, alpha, vh);
    Var relation_values = nn::matmul(t, nn::relation_scatter(t, alpha, rel), nn::slice_cols(t, rv, h * dh, dh));
    outs.push_back(nn::add(t, values, relation_values));
  }
  result.z = heads == 1 ? outs[0] : nn::concat_cols(t, outs);
  return result;
}

template <typename T>
PathEncoding encode_paths(Bound<T>& p, const EncoderConfig& c, Var x, const SoftPathTable& paths) {
  auto& t = p.tape();
  const int n = t.value(x).rows();
  const int dx = c.d_x();
  if (static_cast<int>(paths.out_path.size()) != n || static_cast<int>(paths.in_path.size()) != n) {
    throw std::invalid_argument("encode_paths: path table size does not match node count");
  }
  Var rel_states = nn::matmul(t, p("relation.embed"), p("paths.rel_proj"));
  Var source = nn::concat_rows(t, {x, rel_states});
  const int num_relations = t.value(rel_states).rows();

  auto encode = [&](const std::vector<Path>& table, const nn::LstmVars<T>& cell) {
    // Input projections of every node and relation row, gathered per step.
    Var projected = nn::matmul(t, source, cell.wx);
    std::size_t steps = 0;
    for (const auto& path : table) {
      if (path.empty()) throw std::invalid_argument("encode_paths: empty path");
      if (c.max_path_len > 0 && static_cast<int>(path.size()) > c.max_path_len) {
        throw std::invalid_argument("encode_paths: path longer than max_path_len; truncate first");
      }
      steps = std::max(steps, path.size());
    }
    nn::LstmState<T> state{t.constant(nn::Tensor<T>(n, dx)), t.constant(nn::Tensor<T>(n, dx))};
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<int> rows(n, 0);
      std::vector<std::uint8_t> active(n, 0);
      bool all_active = true;
      for (int i = 0; i < n; ++i) {
        const Path& path = table[i];
        if (s >= path.size()) {
          all_active = false;
          continue;
        }
        const PathElement& el = path[s];
        if (el.is_node()) {
          if (el.index < 0 || el.index >= n) throw std::invalid_argument("encode_paths: node index out of range");
          rows[i] = el.index;
        } else {
          if (el.index < 0 || el.index >= num_relations) {
            throw std::invalid_argument("encode_paths: relation id out of range");
          }
          rows[i] = n + el.index;
        }
        active[i] = 1;
      }
      nn::LstmState<T> next = nn::lstm_step_projected(t, cell, nn::gather_rows(t, projected, rows), state);
      if (all_active) {
        state = next;
      } else {
        state = {nn::blend_rows(t, next.h, state.h, active), nn::blend_rows(t, next.c, state.c, active)};
      }
    }
    return state.h;
  };

  nn::LstmVars<T> out_cell{p("paths.out.wx"), p("paths.out.wh"), p("paths.out.b"), dx};
  nn::LstmVars<T> in_cell{p("paths.in.wx"), p("paths.in.wh"), p("paths.in.b"), dx};
  return {encode(paths.out_path, out_cell), encode(paths.in_path, in_cell)};
}

template <typename T>
AttentionResult global_attention(Bound<T>& p, const EncoderConfig& c, Var g_out, Var g_in,
                                 const PassOptions& options) {
  auto& t = p.tape();
  const int dx = c.d_x();
  if (!t.value(g_out).same_shape(t.value(g_in)) || t.value(g_out).cols() != dx) {
    throw std::invalid_argument("global_attention: path encodings must both be [n, d_x]");
  }
  const int heads = c.heads_global;
  const int dh = dx / heads;
  Var q = nn::matmul(t, g_out, p("global.wq"));
  Var k = nn::matmul(t, g_in, p("global.wk"));
  Var v_out = nn::matmul(t, g_out, p("global.wv"));
  Var v_in = nn::matmul(t, g_in, p("global.wv"));
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dx)));
  AttentionResult result;
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    Var qh = nn::slice_cols(t, q, h * dh, dh);
    Var kh = nn::slice_cols(t, k, h * dh, dh);
    Var alpha = nn::softmax_rows(t, nn::matmul_nt(t, qh, kh), scale);
    result.alpha.push_back(alpha);
    alpha = maybe_dropout(t, alpha, c.dropout, options);
    // sum_j alpha_ij (g_out_i + g_in_j) W_V = rowsum(alpha)_i g_out_i W_V + alpha (G_in W_V)
    Var own = nn::scale_rows(t, nn::slice_cols(t, v_out, h * dh, dh), nn::row_sum(t, alpha));
    outs.push_back(nn::add(t, own, nn::matmul(t, alpha, nn::slice_cols(t, v_in, h * dh, dh))));
  }
  result.z = heads == 1 ? outs[0] : nn::concat_cols(t, outs);
  return result;
}

template <typename T>
Var isdg_layer(Bound<T>& p, const EncoderConfig& c, Var x, const ModelInput& input, const PassOptions& options,
               LayerTrace* trace) {
  auto& t = p.tape();
  Var z = x;
  if (c.variant != Variant::kPos) {
    const auto rel = relation_index<T>(c, input);
    AttentionResult local = local_attention(p, c, x, rel, options);
    Var z_local = affine(p, local.z, "local.wo", "local.bo");
    Var fused_in = z_local;
    if (trace) {
      trace->alpha_local = local.alpha;
      trace->z_local = z_local;
    }
    if (c.variant == Variant::kFull) {
      PathEncoding g = encode_paths(p, c, x, input.paths);
      AttentionResult global = global_attention(p, c, g.g_out, g.g_in, options);
      Var z_global = affine(p, global.z, "global.wo", "global.bo");
      fused_in = nn::concat_cols(t, {z_local, z_global});
      if (trace) {
        trace->alpha_global = global.alpha;
        trace->z_global = z_global;
      }
    }
    z = affine(p, maybe_dropout(t, fused_in, c.dropout, options), "fusion.w", "fusion.b");
  }
  if (trace) trace->fused = z;
  for (int l = 0; l < c.final_selfattn_layers; ++l) {
    z = vanilla_layer(p, "final." + std::to_string(l), c.final_heads, z, c.dropout, options,
                      trace ? &trace->alpha_final : nullptr);
  }
  return z;
}

template <typename T>
SpanScores span_head(Bound<T>& p, Var z, const std::optional<Gold>& gold) {
  auto& t = p.tape();
  SpanScores scores;
  scores.start_logits = affine(p, z, "span.start.w", "span.start.b");
  scores.end_logits = affine(p, z, "span.end.w", "span.end.b");
  if (gold) {
    const int n = t.value(z).rows();
    if (gold->start < 0 || gold->start >= n || gold->end < 0 || gold->end >= n) {
      throw ValidationError("gold span (" + std::to_string(gold->start) + ", " + std::to_string(gold->end) +
                            ") outside " + std::to_string(n) + " nodes");
    }
    scores.loss = nn::add(t, nn::softmax_nll(t, scores.start_logits, gold->start),
                          nn::softmax_nll(t, scores.end_logits, gold->end));
  }
  return scores;
}

SpanPrediction decode_span(const std::vector<double>& p_start, const std::vector<double>& p_end,
                           const std::vector<std::uint8_t>& answerable, int max_answer_len) {
  const int n = static_cast<int>(p_start.size());
  if (p_end.size() != p_start.size() || answerable.size() != p_start.size()) {
    throw std::invalid_argument("decode_span: length mismatch");
  }
  SpanPrediction best;
  for (int s = 0; s < n; ++s) {
    if (!answerable[s]) continue;
    for (int e = s; e < n && e - s < max_answer_len; ++e) {
      if (!answerable[e]) continue;
      const double score = p_start[s] + p_end[e];
      if (best.start < 0 || score > best.score) best = {s, e, score};
    }
  }
  if (best.start < 0) throw ValidationError("no answerable node to decode a span from");
  return best;
}

std::vector<double> softmax_column(const std::vector<double>& logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += out[i] = std::exp(logits[i] - m);
  for (auto& v : out) v /= total;
  return out;
}

template <typename T>
AttentionDistance attention_distance(const std::vector<nn::Tensor<T>>& alpha) {
  AttentionDistance result;
  long total = 0, count = 0;
  for (const auto& a : alpha) {
    std::vector<int> arg(a.rows()), dist(a.rows());
    for (int i = 0; i < a.rows(); ++i) {
      int best = 0;
      for (int j = 1; j < a.cols(); ++j) {
        if (a(i, j) > a(i, best)) best = j;
      }
      arg[i] = best;
      dist[i] = std::abs(i - best);
      total += dist[i];
      ++count;
    }
    result.argmax.push_back(std::move(arg));
    result.distance.push_back(std::move(dist));
  }
  result.mean = count ? static_cast<double>(total) / count : 0.0;
  return result;
}

template <typename T>
Model<T>::Model(EncoderConfig config) : config_(config) {
  declare_parameters(state_, config_);
}

template <typename T>
void Model<T>::initialize(std::uint64_t seed) {
  nn::Rng rng(seed);
  state_.initialize(rng);
}

template <typename T>
std::optional<Var> Model<T>::record(nn::Tape<T>& tape, const ModelInput& input, const std::optional<Gold>& gold,
                                    const PassOptions& options, SpanScores* scores, LayerTrace* trace) {
  Bound<T> p(tape, state_);
  std::vector<Var> backbone_alphas;
  Var x = backbone_forward(p, config_, input, options, trace ? &backbone_alphas : nullptr);
  Var z = isdg_layer(p, config_, x, input, options, trace);
  if (trace) trace->alpha_backbone = backbone_alphas;
  SpanScores s = span_head(p, z, gold);
  if (scores) *scores = s;
  return s.loss;
}

namespace {

template <typename T>
std::vector<double> column(const nn::Tensor<T>& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

}  // namespace

template <typename T>
ModelOutput Model<T>::forward(const ModelInput& input, const std::optional<Gold>& gold) {
  nn::Tape<T> tape;
  SpanScores scores;
  LayerTrace trace;
  auto loss = record(tape, input, gold, {}, &scores, &trace);
  ModelOutput out;
  out.p_start = softmax_column(column(tape.value(scores.start_logits)));
  out.p_end = softmax_column(column(tape.value(scores.end_logits)));
  for (Var a : trace.alpha_local) out.alpha_local.push_back(tape.value(a).template cast<double>());
  for (Var a : trace.alpha_global) out.alpha_global.push_back(tape.value(a).template cast<double>());
  if (loss) out.loss = static_cast<double>(tape.value(*loss)[0]);
  return out;
}

template <typename T>
SpanPrediction Model<T>::predict(const ModelInput& input) {
  ModelOutput out = forward(input);
  return decode_span(out.p_start, out.p_end, input.answerable, config_.max_answer_len);
}

#define ISDG_INSTANTIATE_ENCODER(T)                                                                        \
  template void declare_parameters<T>(nn::ModelState<T>&, const EncoderConfig&);                           \
  template class Bound<T>;                                                                                 \
  template nn::RelationIndexPtr relation_index<T>(const EncoderConfig&, const ModelInput&);                \
  template Var vanilla_layer<T>(Bound<T>&, const std::string&, int, Var, double, const PassOptions&,       \
                                std::vector<Var>*);                                                        \
  template Var backbone_forward<T>(Bound<T>&, const EncoderConfig&, const ModelInput&, const PassOptions&, \
                                   std::vector<Var>*);                                                     \
  template AttentionResult local_attention<T>(Bound<T>&, const EncoderConfig&, Var,                        \
                                              const nn::RelationIndexPtr&, const PassOptions&);            \
  template PathEncoding encode_paths<T>(Bound<T>&, const EncoderConfig&, Var, const SoftPathTable&);       \
  template AttentionResult global_attention<T>(Bound<T>&, const EncoderConfig&, Var, Var,                  \
                                               const PassOptions&);                                        \
  template Var isdg_layer<T>(Bound<T>&, const EncoderConfig&, Var, const ModelInput&, const PassOptions&,  \
                             LayerTrace*);                                                                 \
  template SpanScores span_head<T>(Bound<T>&, Var, const std::optional<Gold>&);                            \
  template AttentionDistance attention_distance<T>(const std::vector<nn::Tensor<T>>&);                     \
  template class Model<T>;

ISDG_INSTANTIATE_ENCODER(float)
ISDG_INSTANTIATE_ENCODER(double)

}  // namespace isdg
