#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "isdg/nn/params.hpp"
#include "isdg/nn/tensor.hpp"

namespace isdg::nn {

// Handle to a value recorded on a tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Records one forward pass. Each recorded node owns its value and, once
// backward() reaches it, a gradient of the same shape. Parameter leaves add
// their gradient into Parameter::grad when backward() finishes.
template <typename T>
class Tape {
 public:
  // Receives the tape and the handle of the node being differentiated.
  using Backward = std::function<void(Tape&, Var)>;

  Var constant(Tensor<T> value);
  Var parameter(Parameter<T>& param);
  // Records an op result. The backward callback runs only if some input
  // requires a gradient.
  Var record(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor<T> value, const std::vector<Var>& inputs, Backward backward);

  const Tensor<T>& value(Var v) const { return nodes_[v.id].value; }
  // Gradient buffer, zero-initialized on first access.
  Tensor<T>& grad(Var v);
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 loss and propagates to parameters.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Backward backward;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace isdg::nn
