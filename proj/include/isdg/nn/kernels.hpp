#pragma once

#include <cstdint>

#include "isdg/nn/tensor.hpp"

// Dense kernels used by the tape ops. The default versions split output rows
// across OpenMP threads; the reference versions are plain serial loops kept
// for testing and benchmarking. Both accumulate every output element over the
// inner dimension in the same order, so results agree bit for bit.
namespace isdg::nn::kernels {

// c = a * b, or c += a * b when accumulate is set.
template <typename T>
void matmul(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate = false);
// c = a * b^T
template <typename T>
void matmul_nt(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate = false);
// c = a^T * b
template <typename T>
void matmul_tn(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate = false);

// Row-wise softmax of scale * logits. Entries with keep[i*cols+j] == 0 get
// probability exactly 0; keep may be null. A fully masked row is an error.
template <typename T>
void softmax_rows(const Tensor<T>& logits, T scale, const std::uint8_t* keep, Tensor<T>& out);

namespace reference {

template <typename T>
void matmul(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate = false);
template <typename T>
void matmul_nt(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate = false);
template <typename T>
void matmul_tn(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate = false);
template <typename T>
void softmax_rows(const Tensor<T>& logits, T scale, const std::uint8_t* keep, Tensor<T>& out);

}  // namespace reference

// Number of threads the parallel kernels may use.
int max_threads();

}  // namespace isdg::nn::kernels
