#include "isdg/nn/tape.hpp"

#include <stdexcept>

namespace isdg::nn {

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  nodes_.push_back({std::move(value), {}, {}, nullptr, false});
  return {static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& param) {
  nodes_.push_back({param.value, {}, {}, &param, true});
  return {static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
  nodes_.push_back({std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return {static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
  nodes_.push_back({std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return {static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Tensor<T>& Tape<T>::grad(Var v) {
  Node& node = nodes_[v.id];
  if (!node.grad.same_shape(node.value) || node.grad.empty()) {
    node.grad = Tensor<T>(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (value(loss).size() != 1) throw std::invalid_argument("backward() needs a scalar loss");
  grad(loss)[0] += T(1);
  for (int id = loss.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.grad.empty()) continue;
    if (node.backward) {
      // the callback may grow other nodes' grads but never this node's
      node.backward(*this, Var{id});
    }
    if (node.param) {
      Tensor<T>& target = node.param->grad;
      if (!target.same_shape(node.value)) target = Tensor<T>(node.value.rows(), node.value.cols());
      for (std::size_t k = 0; k < target.size(); ++k) target[k] += node.grad[k];
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace isdg::nn
