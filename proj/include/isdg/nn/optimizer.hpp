#pragma once

#include <vector>

#include "isdg/nn/params.hpp"

namespace isdg::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // <= 0 disables clipping
};

// Adam over every group of a ModelState, with global gradient-norm clipping.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update from the accumulated gradients and returns the global
  // gradient norm measured before clipping. Gradients are left untouched.
  double step(ModelState<T>& state);

  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

template <typename T>
double gradient_norm(const ModelState<T>& state);

}  // namespace isdg::nn
