#pragma once

#include <deque>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "isdg/nn/random.hpp"
#include "isdg/nn/tensor.hpp"

namespace isdg::nn {

struct InitSpec {
  enum class Kind {
    kUniform,   // uniform(-scale, scale)
    kFanIn,     // uniform(-1/sqrt(rows), 1/sqrt(rows))
    kZeros,
    kConstant,  // every entry = scale
    kLstmBias,  // zeros, forget-gate block = scale
  };
  Kind kind = Kind::kZeros;
  double scale = 0.0;

  static InitSpec uniform(double s) { return {Kind::kUniform, s}; }
  static InitSpec fan_in() { return {Kind::kFanIn, 0.0}; }
  static InitSpec zeros() { return {Kind::kZeros, 0.0}; }
  static InitSpec constant(double v) { return {Kind::kConstant, v}; }
  static InitSpec lstm_bias(double forget) { return {Kind::kLstmBias, forget}; }
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  InitSpec init;
};

// Named parameter groups with stable addresses, kept in insertion order.
template <typename T>
class ModelState {
 public:
  ModelState() = default;
  ModelState(const ModelState&) = delete;
  ModelState& operator=(const ModelState&) = delete;
  ModelState(ModelState&&) = default;
  ModelState& operator=(ModelState&&) = default;

  Parameter<T>& add(std::string name, int rows, int cols, InitSpec init);
  Parameter<T>& get(std::string_view name);
  const Parameter<T>& get(std::string_view name) const;
  Parameter<T>* find(std::string_view name);
  const Parameter<T>* find(std::string_view name) const;

  void initialize(Rng& rng);
  void zero_grad();

  std::size_t size() const { return params_.size(); }
  std::size_t parameter_count() const;
  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Copies values from a state with identical names and shapes.
  template <typename U>
  void copy_values_from(const ModelState<U>& other);

 private:
  std::deque<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <typename T>
template <typename U>
void ModelState<T>::copy_values_from(const ModelState<U>& other) {
  if (other.size() != size()) throw std::invalid_argument("parameter group count mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    if (other[i].name != params_[i].name || !other[i].value.template cast<T>().same_shape(params_[i].value)) {
      throw std::invalid_argument("parameter group mismatch at '" + params_[i].name + "'");
    }
    params_[i].value = other[i].value.template cast<T>();
  }
}

}  // namespace isdg::nn
