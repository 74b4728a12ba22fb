#include "isdg/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace isdg::nn {

template <typename T>
Parameter<T>& ModelState<T>::add(std::string name, int rows, int cols, InitSpec init) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter group '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), Tensor<T>(rows, cols), Tensor<T>(rows, cols), init});
  return params_.back();
}

template <typename T>
Parameter<T>* ModelState<T>::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

template <typename T>
const Parameter<T>* ModelState<T>::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

template <typename T>
Parameter<T>& ModelState<T>::get(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter group '" + std::string(name) + "'");
}

template <typename T>
const Parameter<T>& ModelState<T>::get(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter group '" + std::string(name) + "'");
}

template <typename T>
void ModelState<T>::initialize(Rng& rng) {
  for (auto& p : params_) {
    auto values = p.value.values();
    switch (p.init.kind) {
      case InitSpec::Kind::kUniform:
        for (auto& v : values) v = static_cast<T>(rng.uniform(-p.init.scale, p.init.scale));
        break;
      case InitSpec::Kind::kFanIn: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, p.value.rows())));
        for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
        break;
      }
      case InitSpec::Kind::kZeros:
        p.value.fill(T(0));
        break;
      case InitSpec::Kind::kConstant:
        p.value.fill(static_cast<T>(p.init.scale));
        break;
      case InitSpec::Kind::kLstmBias: {
        // gate blocks are ordered input, forget, cell, output
        p.value.fill(T(0));
        const int hidden = p.value.cols() / 4;
        for (int r = 0; r < p.value.rows(); ++r) {
          for (int c = hidden; c < 2 * hidden; ++c) p.value(r, c) = static_cast<T>(p.init.scale);
        }
        break;
      }
    }
    p.grad = Tensor<T>(p.value.rows(), p.value.cols());
  }
}

template <typename T>
void ModelState<T>::zero_grad() {
  for (auto& p : params_) {
    if (!p.grad.same_shape(p.value)) p.grad = Tensor<T>(p.value.rows(), p.value.cols());
    p.grad.fill(T(0));
  }
}

template <typename T>
std::size_t ModelState<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

template class ModelState<float>;
template class ModelState<double>;

}  // namespace isdg::nn
