#include <benchmark/benchmark.h>

#include "isdg/encoder.hpp"
#include "isdg/nn/kernels.hpp"
#include "isdg/nn/random.hpp"

using namespace isdg;
using nn::Tensor;

namespace {

Tensor<float> random_tensor(int rows, int cols, std::uint64_t seed) {
  nn::Rng rng(seed);
  Tensor<float> t(rows, cols);
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

template <void (*Kernel)(const Tensor<float>&, const Tensor<float>&, Tensor<float>&, bool)>
void BM_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_tensor(n, n, 1), b = random_tensor(n, n, 2);
  Tensor<float> c;
  for (auto _ : state) {
    Kernel(a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n) * n * n);
}

template <void (*Kernel)(const Tensor<float>&, float, const std::uint8_t*, Tensor<float>&)>
void BM_softmax(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_tensor(n, n, 3);
  Tensor<float> out;
  for (auto _ : state) {
    Kernel(a, 0.125f, nullptr, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n) * n);
}

// Forward and backward of one 96-node synthetic example at desk sizes.
void BM_train_step(benchmark::State& state) {
  EncoderConfig c;
  c.d_backbone = 24;
  c.d_pos = 8;
  c.d_r = 8;
  c.backbone_layers = 1;
  c.piece_vocab = 64;
  c.relation_vocab = 21;
  c.variant = static_cast<Variant>(state.range(0));
  Model<float> model(c);
  model.initialize(1);
  const int n = 96;
  nn::Rng rng(4);
  ModelInput in;
  in.n = n;
  for (int i = 0; i < n; ++i) {
    in.piece_ids.push_back(rng.uniform_int(3, 63));
    in.segment.push_back(i < 8 ? 0 : 1);
    in.upos.push_back(rng.uniform_int(0, kNumUpos - 1));
    in.answerable.push_back(i >= 8);
    // Chains of length up to 4 nodes toward node i - i % 4.
    Path out{PathElement::node(i)};
    for (int k = i; k % 4 != 0; --k) {
      out.push_back(PathElement::relation(7));
      out.push_back(PathElement::node(k - 1));
    }
    in.paths.out_path.push_back(out);
    in.paths.in_path.push_back(Path(out.rbegin(), out.rend()));
  }
  in.paths.max_path_len = 8;
  in.rel.assign(n * n, RelationVocab::kNone);
  for (int i = 0; i < n; ++i) {
    in.rel[i * n + i] = RelationVocab::kSelf;
    if (i % 4 != 0) {
      in.rel[i * n + i - 1] = 8;
      in.rel[(i - 1) * n + i] = 7;
    }
  }
  for (auto _ : state) {
    nn::Tape<float> tape;
    const auto loss = model.record(tape, in, Gold{20, 22}, {});
    tape.backward(*loss);
    benchmark::DoNotOptimize(tape.value(*loss)[0]);
  }
}

}  // namespace

BENCHMARK(BM_matmul<nn::kernels::matmul<float>>)->Arg(32)->Arg(96)->Arg(256);
BENCHMARK(BM_matmul<nn::kernels::reference::matmul<float>>)->Arg(32)->Arg(96)->Arg(256);
BENCHMARK(BM_matmul<nn::kernels::matmul_nt<float>>)->Arg(32)->Arg(96)->Arg(256);
BENCHMARK(BM_matmul<nn::kernels::reference::matmul_nt<float>>)->Arg(32)->Arg(96)->Arg(256);
BENCHMARK(BM_matmul<nn::kernels::matmul_tn<float>>)->Arg(32)->Arg(96)->Arg(256);
BENCHMARK(BM_matmul<nn::kernels::reference::matmul_tn<float>>)->Arg(32)->Arg(96)->Arg(256);
BENCHMARK(BM_softmax<nn::kernels::softmax_rows<float>>)->Arg(96)->Arg(512);
BENCHMARK(BM_softmax<nn::kernels::reference::softmax_rows<float>>)->Arg(96)->Arg(512);
BENCHMARK(BM_train_step)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
