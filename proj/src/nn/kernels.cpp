#include "isdg/nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace isdg::nn::kernels {
namespace {

// Below this many multiply-adds a kernel stays on the calling thread.
constexpr long kParallelWork = 1L << 15;

void check_shapes(bool ok, const char* op, int ar, int ac, int br, int bc) {
  if (!ok) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(ar, ac) +
                                " vs " + shape_string(br, bc));
  }
}

template <typename T>
void prepare_output(Tensor<T>& c, int rows, int cols, bool accumulate) {
  if (accumulate) {
    if (c.rows() != rows || c.cols() != cols) {
      throw std::invalid_argument("accumulate target has shape " +
                                  shape_string(c.rows(), c.cols()) + ", expected " +
                                  shape_string(rows, cols));
    }
  } else if (c.rows() != rows || c.cols() != cols) {
    c = Tensor<T>(rows, cols);
  }
}

// Softmax of one row; shared by both variants so they agree exactly.
template <typename T>
void softmax_row(const T* in, int n, T scale, const std::uint8_t* keep, T* out) {
  T max_value = -std::numeric_limits<T>::infinity();
  bool any = false;
  for (int j = 0; j < n; ++j) {
    if (keep && !keep[j]) continue;
    any = true;
    max_value = std::max(max_value, scale * in[j]);
  }
  if (!any) throw std::logic_error("softmax over a fully masked row");
  T total = 0;
  for (int j = 0; j < n; ++j) {
    if (keep && !keep[j]) {
      out[j] = 0;
      continue;
    }
    out[j] = std::exp(scale * in[j] - max_value);
    total += out[j];
  }
  for (int j = 0; j < n; ++j) out[j] /= total;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <typename T>
void matmul(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate) {
  check_shapes(a.cols() == b.rows(), "matmul", a.rows(), a.cols(), b.rows(), b.cols());
  const int m = a.rows(), k = a.cols(), n = b.cols();
  prepare_output(c, m, n, accumulate);
  const long work = static_cast<long>(m) * k * n;
#pragma omp parallel if (work > kParallelWork)
  {
    std::vector<T> acc(n);
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      std::fill(acc.begin(), acc.end(), T(0));
      const T* arow = a.data() + static_cast<std::size_t>(i) * k;
      for (int p = 0; p < k; ++p) {
        const T av = arow[p];
        const T* brow = b.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) acc[j] += av * brow[j];
      }
      T* crow = c.data() + static_cast<std::size_t>(i) * n;
      if (accumulate) {
        for (int j = 0; j < n; ++j) crow[j] += acc[j];
      } else {
        for (int j = 0; j < n; ++j) crow[j] = acc[j];
      }
    }
  }
}

template <typename T>
void matmul_nt(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate) {
  check_shapes(a.cols() == b.cols(), "matmul_nt", a.rows(), a.cols(), b.rows(), b.cols());
  const int m = a.rows(), k = a.cols(), n = b.rows();
  prepare_output(c, m, n, accumulate);
  // Transposed copy of b so the inner loop runs over contiguous output columns;
  // each entry is still summed over p in order.
  std::vector<T> bt(static_cast<std::size_t>(k) * n);
  for (int j = 0; j < n; ++j) {
    for (int p = 0; p < k; ++p) bt[static_cast<std::size_t>(p) * n + j] = b.data()[static_cast<std::size_t>(j) * k + p];
  }
  const long work = static_cast<long>(m) * k * n;
#pragma omp parallel if (work > kParallelWork)
  {
    std::vector<T> acc(n);
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      std::fill(acc.begin(), acc.end(), T(0));
      const T* arow = a.data() + static_cast<std::size_t>(i) * k;
      for (int p = 0; p < k; ++p) {
        const T av = arow[p];
        const T* brow = bt.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) acc[j] += av * brow[j];
      }
      T* crow = c.data() + static_cast<std::size_t>(i) * n;
      if (accumulate) {
        for (int j = 0; j < n; ++j) crow[j] += acc[j];
      } else {
        for (int j = 0; j < n; ++j) crow[j] = acc[j];
      }
    }
  }
}

template <typename T>
void matmul_tn(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate) {
  check_shapes(a.rows() == b.rows(), "matmul_tn", a.rows(), a.cols(), b.rows(), b.cols());
  const int m = a.cols(), k = a.rows(), n = b.cols();
  prepare_output(c, m, n, accumulate);
  const long work = static_cast<long>(m) * k * n;
#pragma omp parallel if (work > kParallelWork)
  {
    std::vector<T> acc(n);
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      std::fill(acc.begin(), acc.end(), T(0));
      for (int p = 0; p < k; ++p) {
        const T av = a.data()[static_cast<std::size_t>(p) * m + i];
        const T* brow = b.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) acc[j] += av * brow[j];
      }
      T* crow = c.data() + static_cast<std::size_t>(i) * n;
      if (accumulate) {
        for (int j = 0; j < n; ++j) crow[j] += acc[j];
      } else {
        for (int j = 0; j < n; ++j) crow[j] = acc[j];
      }
    }
  }
}

template <typename T>
void softmax_rows(const Tensor<T>& logits, T scale, const std::uint8_t* keep, Tensor<T>& out) {
  const int m = logits.rows(), n = logits.cols();
  if (!out.same_shape(logits)) out = Tensor<T>(m, n);
  if (keep) {
    // exceptions must not escape the parallel region
    for (int i = 0; i < m; ++i) {
      const std::uint8_t* row = keep + static_cast<std::size_t>(i) * n;
      if (std::all_of(row, row + n, [](std::uint8_t k) { return k == 0; })) {
        throw std::logic_error("softmax over a fully masked row");
      }
    }
  }
  const long work = static_cast<long>(m) * n * 8;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (int i = 0; i < m; ++i) {
    softmax_row(logits.data() + static_cast<std::size_t>(i) * n, n, scale,
                keep ? keep + static_cast<std::size_t>(i) * n : nullptr,
                out.data() + static_cast<std::size_t>(i) * n);
  }
}

namespace reference {

template <typename T>
void matmul(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate) {
  check_shapes(a.cols() == b.rows(), "matmul", a.rows(), a.cols(), b.rows(), b.cols());
  prepare_output(c, a.rows(), b.cols(), accumulate);
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      T acc = 0;
      for (int p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
      c(i, j) = accumulate ? c(i, j) + acc : acc;
    }
  }
}

template <typename T>
void matmul_nt(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate) {
  check_shapes(a.cols() == b.cols(), "matmul_nt", a.rows(), a.cols(), b.rows(), b.cols());
  prepare_output(c, a.rows(), b.rows(), accumulate);
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.rows(); ++j) {
      T acc = 0;
      for (int p = 0; p < a.cols(); ++p) acc += a(i, p) * b(j, p);
      c(i, j) = accumulate ? c(i, j) + acc : acc;
    }
  }
}

template <typename T>
void matmul_tn(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate) {
  check_shapes(a.rows() == b.rows(), "matmul_tn", a.rows(), a.cols(), b.rows(), b.cols());
  prepare_output(c, a.cols(), b.cols(), accumulate);
  for (int i = 0; i < a.cols(); ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      T acc = 0;
      for (int p = 0; p < a.rows(); ++p) acc += a(p, i) * b(p, j);
      c(i, j) = accumulate ? c(i, j) + acc : acc;
    }
  }
}

template <typename T>
void softmax_rows(const Tensor<T>& logits, T scale, const std::uint8_t* keep, Tensor<T>& out) {
  if (!out.same_shape(logits)) out = Tensor<T>(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    softmax_row(logits.data() + static_cast<std::size_t>(i) * logits.cols(), logits.cols(), scale,
                keep ? keep + static_cast<std::size_t>(i) * logits.cols() : nullptr,
                out.data() + static_cast<std::size_t>(i) * logits.cols());
  }
}

}  // namespace reference

#define ISDG_INSTANTIATE_KERNELS(T)                                                         \
  template void matmul<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&, bool);            \
  template void matmul_nt<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&, bool);         \
  template void matmul_tn<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&, bool);         \
  template void softmax_rows<T>(const Tensor<T>&, T, const std::uint8_t*, Tensor<T>&);      \
  template void reference::matmul<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&, bool); \
  template void reference::matmul_nt<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&,     \
                                        bool);                                              \
  template void reference::matmul_tn<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&,     \
                                        bool);                                              \
  template void reference::softmax_rows<T>(const Tensor<T>&, T, const std::uint8_t*,        \
                                           Tensor<T>&);

ISDG_INSTANTIATE_KERNELS(float)
ISDG_INSTANTIATE_KERNELS(double)

}  // namespace isdg::nn::kernels
