#pragma once

#include <string>
#include <utility>

#include "isdg/nn/params.hpp"
#include "isdg/nn/tape.hpp"

namespace isdg::nn {

// Parameter groups "<prefix>.wx" [d_in, 4h], "<prefix>.wh" [h, 4h] and
// "<prefix>.b" [1, 4h]. Gate blocks are ordered input, forget, cell, output.
template <typename T>
void add_lstm(ModelState<T>& state, const std::string& prefix, int d_in, int hidden);

template <typename T>
struct LstmVars {
  Var wx, wh, b;
  int hidden = 0;
};

template <typename T>
LstmVars<T> bind_lstm(Tape<T>& tape, ModelState<T>& state, const std::string& prefix);

template <typename T>
struct LstmState {
  Var h, c;
};

// One gated update for a batch of rows: x [m, d_in], h and c [m, hidden].
template <typename T>
LstmState<T> lstm_step(Tape<T>& tape, const LstmVars<T>& cell, Var x, LstmState<T> prev);

// Same update with the input term x * wx already computed: xw [m, 4h].
template <typename T>
LstmState<T> lstm_step_projected(Tape<T>& tape, const LstmVars<T>& cell, Var xw, LstmState<T> prev);

}  // namespace isdg::nn
