#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "isdg/errors.hpp"
#include "isdg/nn/checkpoint.hpp"
#include "isdg/nn/gradcheck.hpp"
#include "isdg/nn/kernels.hpp"
#include "isdg/nn/lstm.hpp"
#include "isdg/nn/ops.hpp"
#include "isdg/nn/optimizer.hpp"
#include "isdg/nn/params.hpp"
#include "isdg/nn/tape.hpp"

using namespace isdg::nn;

namespace {

Tensor<double> random_tensor(Rng& rng, int r, int c, double scale = 1.0) {
  Tensor<double> t(r, c);
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

using Build = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

// Gradient check of a random linear functional of an op's output.
double op_gradcheck(const std::vector<std::pair<int, int>>& shapes, const Build& build, std::uint64_t seed = 1) {
  ModelState<double> state;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    state.add("in" + std::to_string(k), shapes[k].first, shapes[k].second, InitSpec::uniform(1.0));
  }
  Rng rng(seed);
  state.initialize(rng);
  Tensor<double> weights;
  auto loss = [&](ModelState<double>& s, bool with_grad) {
    Tape<double> tape;
    std::vector<Var> vars;
    for (auto& p : s) vars.push_back(tape.parameter(p));
    const Var out = build(tape, vars);
    if (weights.empty()) weights = random_tensor(rng, tape.value(out).rows(), tape.value(out).cols());
    const Var l = sum(tape, mul_const(tape, out, weights));
    if (with_grad) tape.backward(l);
    return tape.value(l)[0];
  };
  loss(state, false);
  return finite_diff_check(state, loss).max_rel_error;
}

}  // namespace

TEST_CASE("parallel kernels agree with the serial reference") {
  Rng rng(2);
  for (auto [m, k, n] : {std::array{1, 1, 1}, std::array{7, 5, 3}, std::array{64, 48, 80}, std::array{130, 17, 129}}) {
    const auto a = random_tensor(rng, m, k).cast<float>();
    const auto b = random_tensor(rng, k, n).cast<float>();
    const auto bt = random_tensor(rng, n, k).cast<float>();
    const auto at = random_tensor(rng, k, m).cast<float>();
    Tensor<float> c1, c2;
    kernels::matmul(a, b, c1);
    kernels::reference::matmul(a, b, c2);
    CHECK(c1 == c2);
    kernels::matmul_nt(a, bt, c1);
    kernels::reference::matmul_nt(a, bt, c2);
    CHECK(c1 == c2);
    kernels::matmul_tn(at, b, c1);
    kernels::reference::matmul_tn(at, b, c2);
    CHECK(c1 == c2);
    kernels::matmul(a, b, c1, true);
    kernels::reference::matmul(a, b, c2, true);
    CHECK(c1 == c2);
    Tensor<float> s1, s2;
    kernels::softmax_rows(c1, 0.5f, nullptr, s1);
    kernels::reference::softmax_rows(c1, 0.5f, nullptr, s2);
    CHECK(s1 == s2);
  }
  Tensor<float> bad(2, 3), other(4, 2), out;
  CHECK_THROWS_AS(kernels::matmul(bad, other, out), std::invalid_argument);
}

TEST_CASE("affine map") {
  Tape<double> tape;
  SUBCASE("identity weight and zero bias") {
    Rng rng(1);
    const auto x = random_tensor(rng, 3, 4);
    Tensor<double> eye(4, 4);
    for (int i = 0; i < 4; ++i) eye(i, i) = 1;
    const Var y = add_row(tape, matmul(tape, tape.constant(x), tape.constant(eye)), tape.constant(Tensor<double>(1, 4)));
    CHECK(tape.value(y) == x);
  }
  SUBCASE("scalar") {
    const Var y = add_row(tape, matmul(tape, tape.constant(Tensor<double>(1, 1, 2.0)), tape.constant(Tensor<double>(1, 1, 3.0))),
                          tape.constant(Tensor<double>(1, 1, 1.0)));
    CHECK(tape.value(y)[0] == 7.0);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(matmul(tape, tape.constant(Tensor<double>(2, 3)), tape.constant(Tensor<double>(2, 3))),
                    std::invalid_argument);
  }
  SUBCASE("gradient of sum(xW) is the column sums of x") {
    ModelState<double> state;
    state.add("w", 4, 2, InitSpec::uniform(1.0));
    Rng rng(3);
    state.initialize(rng);
    const auto x = random_tensor(rng, 5, 4);
    auto loss = [&](ModelState<double>& s, bool with_grad) {
      Tape<double> t;
      const Var l = sum(t, matmul(t, t.constant(x), t.parameter(s.get("w"))));
      if (with_grad) t.backward(l);
      return t.value(l)[0];
    };
    const auto result = finite_diff_check(state, loss);
    CHECK(result.max_rel_error < 1e-6);
    state.zero_grad();
    loss(state, true);
    for (int i = 0; i < 4; ++i) {
      double col = 0;
      for (int r = 0; r < 5; ++r) col += x(r, i);
      CHECK(state.get("w").grad(i, 0) == doctest::Approx(col).epsilon(1e-12));
      CHECK(state.get("w").grad(i, 1) == doctest::Approx(col).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax rows") {
  Tape<double> tape;
  const Var uniform = softmax_rows(tape, tape.constant(Tensor<double>(1, 4)), 1.0);
  for (int j = 0; j < 4; ++j) CHECK(tape.value(uniform)[j] == doctest::Approx(0.25).epsilon(1e-15));
  const Var two = softmax_rows(tape, tape.constant(Tensor<double>(1, 2, std::vector<double>{0.0, std::log(3.0)})), 1.0);
  CHECK(tape.value(two)[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(tape.value(two)[1] == doctest::Approx(0.75).epsilon(1e-14));

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_tensor(rng, 1, 8, 30.0);
    const double factor = rng.uniform(0.1, 2.0);
    const auto& p = tape.value(softmax_rows(tape, tape.constant(x), factor));
    double total = 0;
    for (int j = 0; j < 8; ++j) total += std::exp(factor * x[j]);
    double row = 0;
    for (int j = 0; j < 8; ++j) {
      CHECK(std::abs(p[j] - std::exp(factor * x[j]) / total) < 1e-12);
      CHECK(p[j] > 0);
      row += p[j];
    }
    CHECK(std::abs(row - 1) < 1e-6);
  }
  // Large logits stay finite.
  const auto& big = tape.value(softmax_rows(tape, tape.constant(Tensor<double>(1, 3, std::vector<double>{1e4, 1e4, 0})), 1.0));
  CHECK(big[0] == doctest::Approx(0.5));
  const auto& masked =
      tape.value(softmax_rows(tape, tape.constant(Tensor<double>(1, 3, 1.0)), 1.0, std::vector<std::uint8_t>{1, 0, 1}));
  CHECK(masked[1] == 0.0);
  CHECK(masked[0] == doctest::Approx(0.5));
  CHECK_THROWS(softmax_rows(tape, tape.constant(Tensor<double>(1, 2)), 1.0, std::vector<std::uint8_t>{0, 0}));
}

TEST_CASE("lstm step") {
  SUBCASE("zero parameters and input give a zero state") {
    ModelState<double> state;
    add_lstm(state, "cell", 3, 2);
    Tape<double> tape;
    const auto cell = bind_lstm(tape, state, "cell");
    const LstmState<double> s = lstm_step(tape, cell, tape.constant(Tensor<double>(1, 3)),
                                          {tape.constant(Tensor<double>(1, 2)), tape.constant(Tensor<double>(1, 2))});
    for (double v : tape.value(s.h).values()) CHECK(v == 0.0);
    for (double v : tape.value(s.c).values()) CHECK(v == 0.0);
  }
  SUBCASE("scalar gate formulas") {
    ModelState<double> state;
    add_lstm(state, "cell", 1, 1);
    const double wx[4] = {0.5, -0.3, 0.8, 0.2}, wh[4] = {0.1, 0.4, -0.6, 0.7}, b[4] = {0.05, 1.0, -0.1, 0.3};
    for (int g = 0; g < 4; ++g) {
      state.get("cell.wx").value[g] = wx[g];
      state.get("cell.wh").value[g] = wh[g];
      state.get("cell.b").value[g] = b[g];
    }
    const double x = 0.9, h0 = -0.4, c0 = 0.25;
    auto sig = [](double v) { return 1 / (1 + std::exp(-v)); };
    const double i = sig(wx[0] * x + wh[0] * h0 + b[0]);
    const double f = sig(wx[1] * x + wh[1] * h0 + b[1]);
    const double g = std::tanh(wx[2] * x + wh[2] * h0 + b[2]);
    const double o = sig(wx[3] * x + wh[3] * h0 + b[3]);
    const double c1 = f * c0 + i * g;
    const double h1 = o * std::tanh(c1);
    Tape<double> tape;
    const auto cell = bind_lstm(tape, state, "cell");
    const auto s = lstm_step(tape, cell, tape.constant(Tensor<double>(1, 1, x)),
                             {tape.constant(Tensor<double>(1, 1, h0)), tape.constant(Tensor<double>(1, 1, c0))});
    CHECK(std::abs(tape.value(s.c)[0] - c1) < 1e-15);
    CHECK(std::abs(tape.value(s.h)[0] - h1) < 1e-15);
  }
  SUBCASE("forget bias initializes to one") {
    ModelState<double> state;
    add_lstm(state, "cell", 2, 3);
    Rng rng(1);
    state.initialize(rng);
    const auto& b = state.get("cell.b").value;
    for (int k = 0; k < 12; ++k) CHECK(b[k] == (k >= 3 && k < 6 ? 1.0 : 0.0));
  }
  SUBCASE("two-step sequence gradient") {
    ModelState<double> state;
    add_lstm(state, "cell", 3, 2);
    Rng rng(7);
    state.initialize(rng);
    const auto x1 = random_tensor(rng, 2, 3), x2 = random_tensor(rng, 2, 3), w = random_tensor(rng, 2, 2);
    auto loss = [&](ModelState<double>& s, bool with_grad) {
      Tape<double> t;
      const auto cell = bind_lstm(t, s, "cell");
      LstmState<double> st{t.constant(Tensor<double>(2, 2)), t.constant(Tensor<double>(2, 2))};
      st = lstm_step(t, cell, t.constant(x1), st);
      st = lstm_step(t, cell, t.constant(x2), st);
      const Var l = sum(t, mul_const(t, st.h, w));
      if (with_grad) t.backward(l);
      return t.value(l)[0];
    };
    CHECK(finite_diff_check(state, loss).max_rel_error < 1e-4);
  }
}

TEST_CASE("finite difference checker") {
  ModelState<double> state;
  state.add("p", 10, 10, InitSpec::uniform(1.0));
  Rng rng(4);
  state.initialize(rng);
  SUBCASE("sum has an all-ones gradient") {
    auto loss = [](ModelState<double>& s, bool with_grad) {
      Tape<double> t;
      const Var l = sum(t, t.parameter(s.get("p")));
      if (with_grad) t.backward(l);
      return t.value(l)[0];
    };
    const auto r = finite_diff_check(state, loss);
    CHECK(r.max_rel_error < 1e-9);
    CHECK(r.per_group.at("p").coordinates == 64);
    for (double g : state.get("p").grad.values()) CHECK(g == 1.0);
  }
  SUBCASE("squared norm has gradient 2p") {
    auto loss = [](ModelState<double>& s, bool with_grad) {
      Tape<double> t;
      const Var p = t.parameter(s.get("p"));
      const Var l = sum(t, mul(t, p, p));
      if (with_grad) t.backward(l);
      return t.value(l)[0];
    };
    CHECK(finite_diff_check(state, loss).max_rel_error < 1e-8);
    for (std::size_t k = 0; k < 100; ++k) CHECK(state.get("p").grad[k] == doctest::Approx(2 * state.get("p").value[k]));
  }
  SUBCASE("a wrong gradient is detected") {
    auto loss = [](ModelState<double>& s, bool with_grad) {
      Tape<double> t;
      const Var l = sum(t, t.parameter(s.get("p")));
      if (with_grad) {
        t.backward(l);
        s.get("p").grad[3] += 0.5;
      }
      return t.value(l)[0];
    };
    GradCheckOptions opts;
    opts.coordinates_per_group = 100;
    const auto r = finite_diff_check(state, loss, opts);
    CHECK(r.max_rel_error > 0.1);
    CHECK(r.worst_group == "p");
    CHECK(r.worst_index == 3);
  }
  SUBCASE("non-finite loss is an error") {
    auto loss = [](ModelState<double>&, bool) { return std::nan(""); };
    CHECK_THROWS(finite_diff_check(state, loss));
  }
}

TEST_CASE("every differentiable op passes the gradient check") {
  auto rel = std::make_shared<RelationIndex>();
  rel->n = 4;
  rel->num_relations = 3;
  rel->ids = {1, 0, 2, 0, 2, 1, 0, 0, 1, 2, 1, 0, 0, 0, 2, 1};
  std::vector<std::pair<std::string, double>> errors;
  auto run = [&](const std::string& name, std::vector<std::pair<int, int>> shapes, Build build) {
    errors.push_back({name, op_gradcheck(shapes, build)});
  };
  run("matmul", {{3, 4}, {4, 2}}, [](auto& t, auto& v) { return matmul(t, v[0], v[1]); });
  run("matmul_nt", {{3, 4}, {2, 4}}, [](auto& t, auto& v) { return matmul_nt(t, v[0], v[1]); });
  run("add", {{3, 4}, {3, 4}}, [](auto& t, auto& v) { return add(t, v[0], v[1]); });
  run("sub", {{3, 4}, {3, 4}}, [](auto& t, auto& v) { return sub(t, v[0], v[1]); });
  run("add_row", {{3, 4}, {1, 4}}, [](auto& t, auto& v) { return add_row(t, v[0], v[1]); });
  run("mul", {{3, 4}, {3, 4}}, [](auto& t, auto& v) { return mul(t, v[0], v[1]); });
  run("scale", {{3, 4}}, [](auto& t, auto& v) { return scale(t, v[0], 0.7); });
  run("sigmoid", {{3, 4}}, [](auto& t, auto& v) { return sigmoid(t, v[0]); });
  run("tanh", {{3, 4}}, [](auto& t, auto& v) { return isdg::nn::tanh(t, v[0]); });
  run("gelu", {{3, 4}}, [](auto& t, auto& v) { return gelu(t, v[0]); });
  run("concat_cols", {{3, 2}, {3, 3}}, [](auto& t, auto& v) { return concat_cols(t, {v[0], v[1]}); });
  run("slice_cols", {{3, 5}}, [](auto& t, auto& v) { return slice_cols(t, v[0], 1, 3); });
  run("concat_rows", {{2, 3}, {1, 3}}, [](auto& t, auto& v) { return concat_rows(t, {v[0], v[1]}); });
  run("gather_rows", {{4, 3}}, [](auto& t, auto& v) { return gather_rows(t, v[0], {2, 0, 2, 3}); });
  run("softmax_rows", {{3, 4}}, [](auto& t, auto& v) { return softmax_rows(t, v[0], 0.8); });
  run("softmax_masked", {{2, 3}}, [](auto& t, auto& v) {
    return softmax_rows(t, v[0], 0.8, std::vector<std::uint8_t>{1, 0, 1, 1, 1, 0});
  });
  run("layer_norm", {{3, 5}, {1, 5}, {1, 5}}, [](auto& t, auto& v) { return layer_norm(t, v[0], v[1], v[2]); });
  run("row_sum", {{3, 4}}, [](auto& t, auto& v) { return row_sum(t, v[0]); });
  run("scale_rows", {{3, 4}, {3, 1}}, [](auto& t, auto& v) { return scale_rows(t, v[0], v[1]); });
  run("blend_rows", {{3, 4}, {3, 4}}, [](auto& t, auto& v) {
    return blend_rows(t, v[0], v[1], std::vector<std::uint8_t>{1, 0, 1});
  });
  run("softmax_nll", {{5, 1}}, [](auto& t, auto& v) { return softmax_nll(t, v[0], 2); });
  run("gather_reverse", {{4, 3}}, [rel](auto& t, auto& v) { return relation_gather_reverse(t, v[0], rel); });
  run("gather_forward", {{4, 3}}, [rel](auto& t, auto& v) { return relation_gather_forward(t, v[0], rel); });
  run("gather_pair", {{3, 3}}, [rel](auto& t, auto& v) { return relation_gather_pair(t, v[0], rel); });
  run("scatter", {{4, 4}}, [rel](auto& t, auto& v) { return relation_scatter(t, v[0], rel); });
  for (const auto& [name, err] : errors) {
    INFO(name);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("relation gathers index as documented") {
  auto rel = std::make_shared<RelationIndex>();
  rel->n = 2;
  rel->num_relations = 3;
  rel->ids = {1, 2, 0, 1};  // rel(0,1) = 2, rel(1,0) = 0
  Tape<double> tape;
  const Tensor<double> a(2, 3, std::vector<double>{10, 11, 12, 20, 21, 22});
  const auto& rev = tape.value(relation_gather_reverse(tape, tape.constant(a), rel));
  CHECK(rev(0, 1) == a(0, 0));  // a[0, rel(1, 0)]
  CHECK(rev(1, 0) == a(1, 2));  // a[1, rel(0, 1)]
  const auto& fwd = tape.value(relation_gather_forward(tape, tape.constant(a), rel));
  CHECK(fwd(0, 1) == a(1, 2));  // b[1, rel(0, 1)]
  CHECK(fwd(1, 0) == a(0, 0));
  const Tensor<double> c(3, 3, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  const auto& pair = tape.value(relation_gather_pair(tape, tape.constant(c), rel));
  CHECK(pair(0, 1) == c(2, 0));
  CHECK(pair(1, 1) == c(1, 1));
  const auto& sc = tape.value(relation_scatter(tape, tape.constant(Tensor<double>(2, 2, std::vector<double>{0.3, 0.7, 0.6, 0.4})), rel));
  CHECK(sc(0, 1) == 0.3);
  CHECK(sc(0, 2) == 0.7);
  CHECK(sc(1, 0) == 0.6);
  CHECK(sc(1, 1) == 0.4);
}

TEST_CASE("adam with gradient clipping") {
  ModelState<float> state;
  auto& p = state.add("p", 1, 2, InitSpec::zeros());
  p.grad = Tensor<float>(1, 2, std::vector<float>{3.0f, 4.0f});
  Adam<float> adam({1e-3, 0.9, 0.999, 1e-8, 1.0});
  const double norm = adam.step(state);
  CHECK(norm == doctest::Approx(5.0));
  // The first bias-corrected step moves each coordinate by about lr against its sign.
  CHECK(p.value[0] == doctest::Approx(-1e-3).epsilon(1e-3));
  CHECK(p.value[1] == doctest::Approx(-1e-3).epsilon(1e-3));
  CHECK(gradient_norm(state) == doctest::Approx(5.0));  // gradients are left untouched
}

TEST_CASE("checkpoint round trip and validation") {
  ModelState<float> a;
  a.add("x", 2, 3, InitSpec::uniform(1.0));
  a.add("y", 1, 4, InitSpec::uniform(1.0));
  Rng rng(8);
  a.initialize(rng);
  std::stringstream buffer;
  save_checkpoint(buffer, a, R"({"k":1})");
  ModelState<float> b;
  b.add("x", 2, 3, InitSpec::zeros());
  b.add("y", 1, 4, InitSpec::zeros());
  const auto loaded = load_checkpoint(buffer, b);
  CHECK(loaded.meta_json == R"({"k":1})");
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);

  ModelState<float> wrong;
  wrong.add("x", 3, 2, InitSpec::zeros());
  wrong.add("y", 1, 4, InitSpec::zeros());
  std::stringstream again;
  save_checkpoint(again, a, "{}");
  CHECK_THROWS_AS(load_checkpoint(again, wrong), isdg::ValidationError);
  std::stringstream garbage("not a checkpoint\n");
  CHECK_THROWS_AS(load_checkpoint(garbage, b), isdg::ValidationError);
  std::string truncated = again.str();
  truncated.resize(truncated.size() - 4);
  std::stringstream cut(truncated);
  CHECK_THROWS_AS(load_checkpoint(cut, b), isdg::ValidationError);
}

TEST_CASE("initialization follows the init specs") {
  ModelState<double> s;
  s.add("e", 50, 4, InitSpec::uniform(0.05));
  s.add("w", 16, 8, InitSpec::fan_in());
  s.add("b", 1, 8, InitSpec::zeros());
  Rng rng(1);
  s.initialize(rng);
  for (double v : s.get("e").value.values()) CHECK(std::abs(v) <= 0.05);
  for (double v : s.get("w").value.values()) CHECK(std::abs(v) <= 0.25);
  for (double v : s.get("b").value.values()) CHECK(v == 0.0);
  CHECK_THROWS(s.add("b", 1, 1, InitSpec::zeros()));
}
