#include "isdg/nn/ops.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "isdg/nn/kernels.hpp"

namespace isdg::nn {
namespace {

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_string(a.rows(), a.cols()) + " vs " +
                                shape_string(b.rows(), b.cols()));
  }
}

template <typename T, typename F, typename D>
Var unary(Tape<T>& t, Var a, F f, D dfdx_from_in_out) {
  const Tensor<T>& x = t.value(a);
  Tensor<T> y(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = f(x[k]);
  return t.record(std::move(y), {a}, [a, dfdx_from_in_out](Tape<T>& t, Var self) {
    const Tensor<T>& x = t.value(a);
    const Tensor<T>& y = t.value(self);
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t k = 0; k < x.size(); ++k) ga[k] += g[k] * dfdx_from_in_out(x[k], y[k]);
  });
}

}  // namespace

template <typename T>
Var matmul(Tape<T>& t, Var a, Var b) {
  Tensor<T> out;
  kernels::matmul(t.value(a), t.value(b), out);
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) kernels::matmul_nt(g, t.value(b), t.grad(a), true);
    if (t.requires_grad(b)) kernels::matmul_tn(t.value(a), g, t.grad(b), true);
  });
}

template <typename T>
Var matmul_nt(Tape<T>& t, Var a, Var b) {
  Tensor<T> out;
  kernels::matmul_nt(t.value(a), t.value(b), out);
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) kernels::matmul(g, t.value(b), t.grad(a), true);
    if (t.requires_grad(b)) kernels::matmul_tn(g, t.value(a), t.grad(b), true);
  });
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  require_same(t.value(a), t.value(b), "add");
  Tensor<T> out = t.value(a);
  const Tensor<T>& bv = t.value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += bv[k];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      Tensor<T>& gv = t.grad(v);
      for (std::size_t k = 0; k < g.size(); ++k) gv[k] += g[k];
    }
  });
}

template <typename T>
Var sub(Tape<T>& t, Var a, Var b) {
  require_same(t.value(a), t.value(b), "sub");
  Tensor<T> out = t.value(a);
  const Tensor<T>& bv = t.value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= bv[k];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) {
      Tensor<T>& ga = t.grad(a);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (t.requires_grad(b)) {
      Tensor<T>& gb = t.grad(b);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
    }
  });
}

template <typename T>
Var add_row(Tape<T>& t, Var a, Var row) {
  const Tensor<T>& rv = t.value(row);
  Tensor<T> out = t.value(a);
  if (rv.rows() != 1 || rv.cols() != out.cols()) {
    throw std::invalid_argument("add_row: expected a 1 x " + std::to_string(out.cols()) +
                                " row, got " + shape_string(rv.rows(), rv.cols()));
  }
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  }
  return t.record(std::move(out), {a, row}, [a, row](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) {
      Tensor<T>& ga = t.grad(a);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (t.requires_grad(row)) {
      Tensor<T>& gr = t.grad(row);
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      }
    }
  });
}

template <typename T>
Var mul(Tape<T>& t, Var a, Var b) {
  require_same(t.value(a), t.value(b), "mul");
  Tensor<T> out = t.value(a);
  const Tensor<T>& bv = t.value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= bv[k];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) {
      const Tensor<T>& bv = t.value(b);
      Tensor<T>& ga = t.grad(a);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * bv[k];
    }
    if (t.requires_grad(b)) {
      const Tensor<T>& av = t.value(a);
      Tensor<T>& gb = t.grad(b);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * av[k];
    }
  });
}

template <typename T>
Var scale(Tape<T>& t, Var a, T factor) {
  Tensor<T> out = t.value(a);
  for (auto& v : out.values()) v *= factor;
  return t.record(std::move(out), {a}, [a, factor](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * factor;
  });
}

template <typename T>
Var mul_const(Tape<T>& t, Var a, const Tensor<T>& factor) {
  require_same(t.value(a), factor, "mul_const");
  Tensor<T> out = t.value(a);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= factor[k];
  return t.record(std::move(out), {a}, [a, factor](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * factor[k];
  });
}

template <typename T>
Var sigmoid(Tape<T>& t, Var a) {
  return unary(
      t, a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var tanh(Tape<T>& t, Var a) {
  return unary(
      t, a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var gelu(Tape<T>& t, Var a) {
  static const T kC = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  static const T kA = static_cast<T>(0.044715);
  return unary(
      t, a,
      [](T x) { return T(0.5) * x * (T(1) + std::tanh(kC * (x + kA * x * x * x))); },
      [](T x, T) {
        const T th = std::tanh(kC * (x + kA * x * x * x));
        return T(0.5) * (T(1) + th) +
               T(0.5) * x * (T(1) - th * th) * kC * (T(1) + T(3) * kA * x * x);
      });
}

template <typename T>
Var concat_cols(Tape<T>& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int rows = t.value(parts[0]).rows();
  int cols = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += t.value(p).cols();
  }
  Tensor<T> out(rows, cols);
  int offset = 0;
  for (Var p : parts) {
    const Tensor<T>& v = t.value(p);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
    }
    offset += v.cols();
  }
  return t.record(std::move(out), parts, [parts](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    int offset = 0;
    for (Var p : parts) {
      const int w = t.value(p).cols();
      if (t.requires_grad(p)) {
        Tensor<T>& gp = t.grad(p);
        for (int i = 0; i < g.rows(); ++i) {
          for (int j = 0; j < w; ++j) gp(i, j) += g(i, offset + j);
        }
      }
      offset += w;
    }
  });
}

template <typename T>
Var slice_cols(Tape<T>& t, Var a, int begin, int width) {
  const Tensor<T>& v = t.value(a);
  if (begin < 0 || width < 0 || begin + width > v.cols()) {
    throw std::invalid_argument("slice_cols: [" + std::to_string(begin) + ", " +
                                std::to_string(begin + width) + ") out of " +
                                std::to_string(v.cols()) + " columns");
  }
  Tensor<T> out(v.rows(), width);
  for (int i = 0; i < v.rows(); ++i) {
    for (int j = 0; j < width; ++j) out(i, j) = v(i, begin + j);
  }
  return t.record(std::move(out), {a}, [a, begin, width](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (int i = 0; i < g.rows(); ++i) {
      for (int j = 0; j < width; ++j) ga(i, begin + j) += g(i, j);
    }
  });
}

template <typename T>
Var concat_rows(Tape<T>& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const int cols = t.value(parts[0]).cols();
  int rows = 0;
  for (Var p : parts) {
    if (t.value(p).cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += t.value(p).rows();
  }
  std::vector<T> data;
  data.reserve(static_cast<std::size_t>(rows) * cols);
  for (Var p : parts) {
    auto v = t.value(p).values();
    data.insert(data.end(), v.begin(), v.end());
  }
  return t.record(Tensor<T>(rows, cols, std::move(data)), parts, [parts](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    std::size_t offset = 0;
    for (Var p : parts) {
      const std::size_t count = t.value(p).size();
      if (t.requires_grad(p)) {
        Tensor<T>& gp = t.grad(p);
        for (std::size_t k = 0; k < count; ++k) gp[k] += g[offset + k];
      }
      offset += count;
    }
  });
}

template <typename T>
Var gather_rows(Tape<T>& t, Var table, std::vector<int> rows) {
  const Tensor<T>& v = t.value(table);
  Tensor<T> out(static_cast<int>(rows.size()), v.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= v.rows()) {
      throw std::out_of_range("gather_rows: row " + std::to_string(rows[k]) + " of " +
                              std::to_string(v.rows()));
    }
    auto src = v.row(rows[k]);
    std::copy(src.begin(), src.end(), out.row(static_cast<int>(k)).begin());
  }
  return t.record(std::move(out), {table}, [table, rows = std::move(rows)](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gt = t.grad(table);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto src = g.row(static_cast<int>(k));
      auto dst = gt.row(rows[k]);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var softmax_rows(Tape<T>& t, Var logits, T factor, std::vector<std::uint8_t> keep) {
  const Tensor<T>& z = t.value(logits);
  if (!keep.empty() && keep.size() != z.size()) {
    throw std::invalid_argument("softmax_rows: mask size mismatch");
  }
  Tensor<T> out;
  kernels::softmax_rows(z, factor, keep.empty() ? nullptr : keep.data(), out);
  return t.record(std::move(out), {logits}, [logits, factor](Tape<T>& t, Var self) {
    const Tensor<T>& y = t.value(self);
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gz = t.grad(logits);
    for (int i = 0; i < y.rows(); ++i) {
      T dot = 0;
      for (int j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < y.cols(); ++j) gz(i, j) += factor * y(i, j) * (g(i, j) - dot);
    }
  });
}

template <typename T>
Var layer_norm(Tape<T>& t, Var x, Var gain, Var bias, T eps) {
  const Tensor<T>& xv = t.value(x);
  const Tensor<T>& gv = t.value(gain);
  const Tensor<T>& bv = t.value(bias);
  const int n = xv.rows(), d = xv.cols();
  if (gv.rows() != 1 || gv.cols() != d || !gv.same_shape(bv)) {
    throw std::invalid_argument("layer_norm: gain/bias must be 1 x " + std::to_string(d));
  }
  Tensor<T> out(n, d);
  auto normalized = std::make_shared<Tensor<T>>(n, d);
  auto inv_std = std::make_shared<std::vector<T>>(n);
  for (int i = 0; i < n; ++i) {
    T mean = 0;
    for (int j = 0; j < d; ++j) mean += xv(i, j);
    mean /= d;
    T var = 0;
    for (int j = 0; j < d; ++j) var += (xv(i, j) - mean) * (xv(i, j) - mean);
    var /= d;
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (int j = 0; j < d; ++j) {
      const T h = (xv(i, j) - mean) * is;
      (*normalized)(i, j) = h;
      out(i, j) = h * gv(0, j) + bv(0, j);
    }
  }
  return t.record(std::move(out), {x, gain, bias},
                  [x, gain, bias, normalized, inv_std](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& h = *normalized;
    const Tensor<T>& gv = t.value(gain);
    const int n = g.rows(), d = g.cols();
    if (t.requires_grad(gain) || t.requires_grad(bias)) {
      Tensor<T>& gg = t.grad(gain);
      Tensor<T>& gb = t.grad(bias);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
          gg(0, j) += g(i, j) * h(i, j);
          gb(0, j) += g(i, j);
        }
      }
    }
    if (!t.requires_grad(x)) return;
    Tensor<T>& gx = t.grad(x);
    std::vector<T> dh(d);
    for (int i = 0; i < n; ++i) {
      T mean_dh = 0, mean_dh_h = 0;
      for (int j = 0; j < d; ++j) {
        dh[j] = g(i, j) * gv(0, j);
        mean_dh += dh[j];
        mean_dh_h += dh[j] * h(i, j);
      }
      mean_dh /= d;
      mean_dh_h /= d;
      for (int j = 0; j < d; ++j) {
        gx(i, j) += (*inv_std)[i] * (dh[j] - mean_dh - h(i, j) * mean_dh_h);
      }
    }
  });
}

template <typename T>
Var dropout(Tape<T>& t, Var x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw std::invalid_argument("dropout probability must be below 1");
  const Tensor<T>& xv = t.value(x);
  Tensor<T> mask(xv.rows(), xv.cols());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& m : mask.values()) m = rng.uniform() >= p ? keep_scale : T(0);
  return mul_const(t, x, mask);
}

template <typename T>
Var row_sum(Tape<T>& t, Var a) {
  const Tensor<T>& v = t.value(a);
  Tensor<T> out(v.rows(), 1);
  for (int i = 0; i < v.rows(); ++i) {
    T s = 0;
    for (int j = 0; j < v.cols(); ++j) s += v(i, j);
    out(i, 0) = s;
  }
  return t.record(std::move(out), {a}, [a](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (int i = 0; i < ga.rows(); ++i) {
      for (int j = 0; j < ga.cols(); ++j) ga(i, j) += g(i, 0);
    }
  });
}

template <typename T>
Var scale_rows(Tape<T>& t, Var a, Var s) {
  const Tensor<T>& av = t.value(a);
  const Tensor<T>& sv = t.value(s);
  if (sv.rows() != av.rows() || sv.cols() != 1) {
    throw std::invalid_argument("scale_rows: expected an n x 1 column");
  }
  Tensor<T> out = av;
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) out(i, j) *= sv(i, 0);
  }
  return t.record(std::move(out), {a, s}, [a, s](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& av = t.value(a);
    const Tensor<T>& sv = t.value(s);
    if (t.requires_grad(a)) {
      Tensor<T>& ga = t.grad(a);
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * sv(i, 0);
      }
    }
    if (t.requires_grad(s)) {
      Tensor<T>& gs = t.grad(s);
      for (int i = 0; i < g.rows(); ++i) {
        T acc = 0;
        for (int j = 0; j < g.cols(); ++j) acc += g(i, j) * av(i, j);
        gs(i, 0) += acc;
      }
    }
  });
}

template <typename T>
Var blend_rows(Tape<T>& t, Var fresh, Var old, std::vector<std::uint8_t> take_fresh) {
  const Tensor<T>& fv = t.value(fresh);
  const Tensor<T>& ov = t.value(old);
  require_same(fv, ov, "blend_rows");
  if (take_fresh.size() != static_cast<std::size_t>(fv.rows())) {
    throw std::invalid_argument("blend_rows: mask length mismatch");
  }
  Tensor<T> out = ov;
  for (int i = 0; i < out.rows(); ++i) {
    if (!take_fresh[i]) continue;
    for (int j = 0; j < out.cols(); ++j) out(i, j) = fv(i, j);
  }
  return t.record(std::move(out), {fresh, old},
                  [fresh, old, take_fresh = std::move(take_fresh)](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    for (int i = 0; i < g.rows(); ++i) {
      Var target = take_fresh[i] ? fresh : old;
      if (!t.requires_grad(target)) continue;
      Tensor<T>& gt = t.grad(target);
      for (int j = 0; j < g.cols(); ++j) gt(i, j) += g(i, j);
    }
  });
}

template <typename T>
Var sum(Tape<T>& t, Var a) {
  T total = 0;
  for (T v : t.value(a).values()) total += v;
  return t.record(Tensor<T>(1, 1, total), {a}, [a](Tape<T>& t, Var self) {
    const T g = t.grad(self)[0];
    for (auto& v : t.grad(a).values()) v += g;
  });
}

template <typename T>
Var softmax_nll(Tape<T>& t, Var logits, int target) {
  const Tensor<T>& z = t.value(logits);
  if (target < 0 || static_cast<std::size_t>(target) >= z.size()) {
    throw std::out_of_range("softmax_nll: target " + std::to_string(target) + " out of " +
                            std::to_string(z.size()));
  }
  T max_value = z[0];
  for (T v : z.values()) max_value = std::max(max_value, v);
  T total = 0;
  for (T v : z.values()) total += std::exp(v - max_value);
  const T log_norm = max_value + std::log(total);
  return t.record(Tensor<T>(1, 1, log_norm - z[target]), {logits},
                  [logits, target, log_norm](Tape<T>& t, Var self) {
    const T g = t.grad(self)[0];
    const Tensor<T>& z = t.value(logits);
    Tensor<T>& gz = t.grad(logits);
    for (std::size_t k = 0; k < z.size(); ++k) gz[k] += g * std::exp(z[k] - log_norm);
    gz[target] -= g;
  });
}

namespace {

void check_relation_input(const RelationIndex& rel, int rows, int cols, int want_rows,
                          int want_cols, const char* op) {
  if (rows != want_rows || cols != want_cols) {
    throw std::invalid_argument(std::string(op) + ": expected " +
                                shape_string(want_rows, want_cols) + ", got " +
                                shape_string(rows, cols));
  }
  (void)rel;
}

}  // namespace

template <typename T>
Var relation_gather_reverse(Tape<T>& t, Var a, RelationIndexPtr rel) {
  const Tensor<T>& av = t.value(a);
  const int n = rel->n;
  check_relation_input(*rel, av.rows(), av.cols(), n, rel->num_relations, "relation_gather_reverse");
  Tensor<T> out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = av(i, rel->at(j, i));
  }
  return t.record(std::move(out), {a}, [a, rel](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (int i = 0; i < rel->n; ++i) {
      for (int j = 0; j < rel->n; ++j) ga(i, rel->at(j, i)) += g(i, j);
    }
  });
}

template <typename T>
Var relation_gather_forward(Tape<T>& t, Var b, RelationIndexPtr rel) {
  const Tensor<T>& bv = t.value(b);
  const int n = rel->n;
  check_relation_input(*rel, bv.rows(), bv.cols(), n, rel->num_relations, "relation_gather_forward");
  Tensor<T> out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = bv(j, rel->at(i, j));
  }
  return t.record(std::move(out), {b}, [b, rel](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gb = t.grad(b);
    for (int i = 0; i < rel->n; ++i) {
      for (int j = 0; j < rel->n; ++j) gb(j, rel->at(i, j)) += g(i, j);
    }
  });
}

template <typename T>
Var relation_gather_pair(Tape<T>& t, Var c, RelationIndexPtr rel) {
  const Tensor<T>& cv = t.value(c);
  const int n = rel->n;
  check_relation_input(*rel, cv.rows(), cv.cols(), rel->num_relations, rel->num_relations,
                       "relation_gather_pair");
  Tensor<T> out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = cv(rel->at(i, j), rel->at(j, i));
  }
  return t.record(std::move(out), {c}, [c, rel](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gc = t.grad(c);
    for (int i = 0; i < rel->n; ++i) {
      for (int j = 0; j < rel->n; ++j) gc(rel->at(i, j), rel->at(j, i)) += g(i, j);
    }
  });
}

template <typename T>
Var relation_scatter(Tape<T>& t, Var alpha, RelationIndexPtr rel) {
  const Tensor<T>& av = t.value(alpha);
  const int n = rel->n;
  check_relation_input(*rel, av.rows(), av.cols(), n, n, "relation_scatter");
  Tensor<T> out(n, rel->num_relations);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, rel->at(i, j)) += av(i, j);
  }
  return t.record(std::move(out), {alpha}, [alpha, rel](Tape<T>& t, Var self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(alpha);
    for (int i = 0; i < rel->n; ++i) {
      for (int j = 0; j < rel->n; ++j) ga(i, j) += g(i, rel->at(i, j));
    }
  });
}

#define ISDG_INSTANTIATE_OPS(T)                                                          \
  template Var matmul<T>(Tape<T>&, Var, Var);                                            \
  template Var matmul_nt<T>(Tape<T>&, Var, Var);                                         \
  template Var add<T>(Tape<T>&, Var, Var);                                               \
  template Var sub<T>(Tape<T>&, Var, Var);                                               \
  template Var add_row<T>(Tape<T>&, Var, Var);                                           \
  template Var mul<T>(Tape<T>&, Var, Var);                                               \
  template Var scale<T>(Tape<T>&, Var, T);                                               \
  template Var mul_const<T>(Tape<T>&, Var, const Tensor<T>&);                            \
  template Var sigmoid<T>(Tape<T>&, Var);                                                \
  template Var tanh<T>(Tape<T>&, Var);                                                   \
  template Var gelu<T>(Tape<T>&, Var);                                                   \
  template Var concat_cols<T>(Tape<T>&, const std::vector<Var>&);                        \
  template Var slice_cols<T>(Tape<T>&, Var, int, int);                                   \
  template Var concat_rows<T>(Tape<T>&, const std::vector<Var>&);                        \
  template Var gather_rows<T>(Tape<T>&, Var, std::vector<int>);                          \
  template Var softmax_rows<T>(Tape<T>&, Var, T, std::vector<std::uint8_t>);             \
  template Var layer_norm<T>(Tape<T>&, Var, Var, Var, T);                                \
  template Var dropout<T>(Tape<T>&, Var, double, Rng&);                                  \
  template Var row_sum<T>(Tape<T>&, Var);                                                \
  template Var scale_rows<T>(Tape<T>&, Var, Var);                                        \
  template Var blend_rows<T>(Tape<T>&, Var, Var, std::vector<std::uint8_t>);             \
  template Var sum<T>(Tape<T>&, Var);                                                    \
  template Var softmax_nll<T>(Tape<T>&, Var, int);                                       \
  template Var relation_gather_reverse<T>(Tape<T>&, Var, RelationIndexPtr);              \
  template Var relation_gather_forward<T>(Tape<T>&, Var, RelationIndexPtr);              \
  template Var relation_gather_pair<T>(Tape<T>&, Var, RelationIndexPtr);                 \
  template Var relation_scatter<T>(Tape<T>&, Var, RelationIndexPtr);

ISDG_INSTANTIATE_OPS(float)
ISDG_INSTANTIATE_OPS(double)

}  // namespace isdg::nn
