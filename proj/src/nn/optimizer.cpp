#include "isdg/nn/optimizer.hpp"

#include <cmath>

namespace isdg::nn {

template <typename T>
double gradient_norm(const ModelState<T>& state) {
  double total = 0;
  for (const auto& p : state) {
    for (T g : p.grad.values()) total += static_cast<double>(g) * g;
  }
  return std::sqrt(total);
}

template <typename T>
double Adam<T>::step(ModelState<T>& state) {
  if (m_.empty()) {
    for (const auto& p : state) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  }
  const double norm = gradient_norm(state);
  const double clip = config_.clip_norm > 0 && norm > config_.clip_norm ? config_.clip_norm / norm : 1.0;
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < state.size(); ++k) {
    auto& p = state[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = clip * static_cast<double>(p.grad[i]);
      m[i] = config_.beta1 * m[i] + (1 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1 - config_.beta2) * g * g;
      const double update = config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
      p.value[i] = static_cast<T>(p.value[i] - update);
    }
  }
  return norm;
}

template class Adam<float>;
template class Adam<double>;
template double gradient_norm<float>(const ModelState<float>&);
template double gradient_norm<double>(const ModelState<double>&);

}  // namespace isdg::nn
