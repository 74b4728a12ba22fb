#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "isdg/nn/random.hpp"
#include "isdg/nn/tape.hpp"

// Differentiable ops over 2-D tensors. Every op records its result on the tape
// together with a backward rule; shapes are checked eagerly.
namespace isdg::nn {

template <typename T> Var matmul(Tape<T>& t, Var a, Var b);
// a * b^T
template <typename T> Var matmul_nt(Tape<T>& t, Var a, Var b);
template <typename T> Var add(Tape<T>& t, Var a, Var b);
template <typename T> Var sub(Tape<T>& t, Var a, Var b);
// Adds a 1 x c row to every row of a.
template <typename T> Var add_row(Tape<T>& t, Var a, Var row);
template <typename T> Var mul(Tape<T>& t, Var a, Var b);
template <typename T> Var scale(Tape<T>& t, Var a, T factor);
// Elementwise product with a constant tensor of the same shape.
template <typename T> Var mul_const(Tape<T>& t, Var a, const Tensor<T>& factor);
template <typename T> Var sigmoid(Tape<T>& t, Var a);
template <typename T> Var tanh(Tape<T>& t, Var a);
// tanh approximation of the Gaussian error linear unit
template <typename T> Var gelu(Tape<T>& t, Var a);

template <typename T> Var concat_cols(Tape<T>& t, const std::vector<Var>& parts);
template <typename T> Var slice_cols(Tape<T>& t, Var a, int begin, int width);
template <typename T> Var concat_rows(Tape<T>& t, const std::vector<Var>& parts);
// out[k] = table[rows[k]]; gradients scatter-add back into the table.
template <typename T> Var gather_rows(Tape<T>& t, Var table, std::vector<int> rows);

// Row softmax of factor * logits; keep (row-major, empty = all) excludes
// entries, which then get probability exactly 0.
template <typename T>
Var softmax_rows(Tape<T>& t, Var logits, T factor, std::vector<std::uint8_t> keep = {});
template <typename T> Var layer_norm(Tape<T>& t, Var x, Var gain, Var bias, T eps = T(1e-5));
// Inverted dropout; identity when p == 0.
template <typename T> Var dropout(Tape<T>& t, Var x, double p, Rng& rng);

template <typename T> Var row_sum(Tape<T>& t, Var a);  // n x 1
// out[i, :] = a[i, :] * s[i] for an n x 1 column s.
template <typename T> Var scale_rows(Tape<T>& t, Var a, Var s);
// Per row: take fresh where take_fresh[i] != 0, otherwise old.
template <typename T>
Var blend_rows(Tape<T>& t, Var fresh, Var old, std::vector<std::uint8_t> take_fresh);
template <typename T> Var sum(Tape<T>& t, Var a);  // 1 x 1
// -log softmax(logits)[target] over all entries of logits.
template <typename T> Var softmax_nll(Tape<T>& t, Var logits, int target);

// n x n relation ids, row-major, shared between the ops of one pass.
struct RelationIndex {
  int n = 0;
  int num_relations = 0;
  std::vector<std::uint8_t> ids;
  std::uint8_t at(int i, int j) const { return ids[static_cast<std::size_t>(i) * n + j]; }
};
using RelationIndexPtr = std::shared_ptr<const RelationIndex>;

// out[i, j] = a[i, rel(j, i)] for a: n x R
template <typename T> Var relation_gather_reverse(Tape<T>& t, Var a, RelationIndexPtr rel);
// out[i, j] = b[j, rel(i, j)] for b: n x R
template <typename T> Var relation_gather_forward(Tape<T>& t, Var b, RelationIndexPtr rel);
// out[i, j] = c[rel(i, j), rel(j, i)] for c: R x R
template <typename T> Var relation_gather_pair(Tape<T>& t, Var c, RelationIndexPtr rel);
// out[i, r] = sum_j alpha[i, j] * [rel(i, j) == r], out: n x R
template <typename T> Var relation_scatter(Tape<T>& t, Var alpha, RelationIndexPtr rel);

}  // namespace isdg::nn
