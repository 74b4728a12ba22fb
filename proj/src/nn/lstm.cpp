#include "isdg/nn/lstm.hpp"

#include <stdexcept>

#include "isdg/nn/ops.hpp"

namespace isdg::nn {

template <typename T>
void add_lstm(ModelState<T>& state, const std::string& prefix, int d_in, int hidden) {
  state.add(prefix + ".wx", d_in, 4 * hidden, InitSpec::fan_in());
  state.add(prefix + ".wh", hidden, 4 * hidden, InitSpec::fan_in());
  state.add(prefix + ".b", 1, 4 * hidden, InitSpec::lstm_bias(1.0));
}

template <typename T>
LstmVars<T> bind_lstm(Tape<T>& tape, ModelState<T>& state, const std::string& prefix) {
  LstmVars<T> cell;
  cell.wx = tape.parameter(state.get(prefix + ".wx"));
  cell.wh = tape.parameter(state.get(prefix + ".wh"));
  cell.b = tape.parameter(state.get(prefix + ".b"));
  cell.hidden = tape.value(cell.wh).rows();
  return cell;
}

template <typename T>
LstmState<T> lstm_step(Tape<T>& tape, const LstmVars<T>& cell, Var x, LstmState<T> prev) {
  const int h = cell.hidden;
  if (tape.value(x).cols() != tape.value(cell.wx).rows()) {
    throw std::invalid_argument("lstm_step: input width " + std::to_string(tape.value(x).cols()) +
                                " != " + std::to_string(tape.value(cell.wx).rows()));
  }
  if (tape.value(prev.h).cols() != h || tape.value(prev.c).cols() != h) {
    throw std::invalid_argument("lstm_step: state width mismatch");
  }
  return lstm_step_projected(tape, cell, matmul(tape, x, cell.wx), prev);
}

template <typename T>
LstmState<T> lstm_step_projected(Tape<T>& tape, const LstmVars<T>& cell, Var xw, LstmState<T> prev) {
  const int h = cell.hidden;
  if (tape.value(xw).cols() != 4 * h || tape.value(xw).rows() != tape.value(prev.h).rows()) {
    throw std::invalid_argument("lstm_step_projected: projected input has shape " +
                                shape_string(tape.value(xw).rows(), tape.value(xw).cols()));
  }
  Var gates = add_row(tape, add(tape, xw, matmul(tape, prev.h, cell.wh)), cell.b);
  Var i = sigmoid(tape, slice_cols(tape, gates, 0, h));
  Var f = sigmoid(tape, slice_cols(tape, gates, h, h));
  Var g = tanh(tape, slice_cols(tape, gates, 2 * h, h));
  Var o = sigmoid(tape, slice_cols(tape, gates, 3 * h, h));
  Var c = add(tape, mul(tape, f, prev.c), mul(tape, i, g));
  return {mul(tape, o, tanh(tape, c)), c};
}

template void add_lstm<float>(ModelState<float>&, const std::string&, int, int);
template void add_lstm<double>(ModelState<double>&, const std::string&, int, int);
template LstmVars<float> bind_lstm<float>(Tape<float>&, ModelState<float>&, const std::string&);
template LstmVars<double> bind_lstm<double>(Tape<double>&, ModelState<double>&, const std::string&);
template LstmState<float> lstm_step<float>(Tape<float>&, const LstmVars<float>&, Var, LstmState<float>);
template LstmState<double> lstm_step<double>(Tape<double>&, const LstmVars<double>&, Var, LstmState<double>);
template LstmState<float> lstm_step_projected<float>(Tape<float>&, const LstmVars<float>&, Var, LstmState<float>);
template LstmState<double> lstm_step_projected<double>(Tape<double>&, const LstmVars<double>&, Var,
                                                       LstmState<double>);

}  // namespace isdg::nn
