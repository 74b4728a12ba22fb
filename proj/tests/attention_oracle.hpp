#pragma once

#include <cmath>
#include <vector>

#include "isdg/encoder.hpp"

// Scalar transcription of the local attention equations.
namespace attention_oracle {

using isdg::nn::Tensor;

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const Tensor<double>& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (int i = 0; i < t.rows(); ++i) {
    for (int j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  }
  return m;
}

// Row vector times a column block [c0, c0 + w) of a matrix.
inline std::vector<double> vec_mat(const std::vector<double>& v, const Mat& m, int c0, int w) {
  std::vector<double> out(w, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    for (int c = 0; c < w; ++c) out[c] += v[k] * m[k][c0 + c];
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> out(logits.size());
  double total = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) total += out[k] = std::exp(logits[k] - m);
  for (auto& v : out) v /= total;
  return out;
}

inline Tensor<double> random_states(isdg::nn::Rng& rng, int n, int d) {
  Tensor<double> x(n, d);
  for (auto& v : x.values()) v = rng.uniform(-1, 1);
  return x;
}

struct LocalOracle {
  std::vector<Mat> alpha;  // per head
  Mat z;                   // heads concatenated
};

// Direct transcription of the local attention equations.
inline LocalOracle local_oracle(const isdg::EncoderConfig& c, const isdg::nn::ModelState<double>& s, const Tensor<double>& x_t,
                         const isdg::ISDGraph& g, isdg::MaskMode mode) {
  const int n = g.n, dx = c.d_x(), heads = c.heads_local, dh = dx / heads;
  const Mat x = to_mat(x_t), wq = to_mat(s.get("local.wq").value), wk = to_mat(s.get("local.wk").value),
            wv = to_mat(s.get("local.wv").value), wrq = to_mat(s.get("local.wrq").value),
            wrk = to_mat(s.get("local.wrk").value), wrv = to_mat(s.get("local.wrv").value),
            emb = to_mat(s.get("relation.embed").value);
  LocalOracle out;
  out.z.assign(n, std::vector<double>(dx, 0.0));
  for (int h = 0; h < heads; ++h) {
    Mat alpha(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
      const auto qi = vec_mat(x[i], wq, h * dh, dh);
      std::vector<double> logits(n);
      for (int j = 0; j < n; ++j) {
        const auto kj = vec_mat(x[j], wk, h * dh, dh);
        const auto rq_ij = vec_mat(emb[g.at(i, j)], wrq, 0, dh);
        const auto rk_ji = vec_mat(emb[g.at(j, i)], wrk, 0, dh);
        const double e = dot(qi, kj) + dot(qi, rk_ji) + dot(rq_ij, kj) + dot(rq_ij, rk_ji);
        const double m = g.at(i, j) == isdg::RelationVocab::kNone ? 0.0 : 1.0;
        logits[j] = m * e / std::sqrt(static_cast<double>(dx));
      }
      if (mode == isdg::MaskMode::kLiteral) {
        alpha[i] = softmax(logits);
      } else {
        std::vector<double> kept;
        for (int j = 0; j < n; ++j) kept.push_back(g.at(i, j) == isdg::RelationVocab::kNone ? -1e300 : logits[j]);
        alpha[i] = softmax(kept);
        for (int j = 0; j < n; ++j) {
          if (g.at(i, j) == isdg::RelationVocab::kNone) alpha[i][j] = 0;
        }
      }
      for (int j = 0; j < n; ++j) {
        const auto vj = vec_mat(x[j], wv, h * dh, dh);
        const auto rv = vec_mat(emb[g.at(i, j)], wrv, h * dh, dh);
        for (int d = 0; d < dh; ++d) out.z[i][h * dh + d] += alpha[i][j] * (vj[d] + rv[d]);
      }
    }
    out.alpha.push_back(alpha);
  }
  return out;
}

}  // namespace attention_oracle
