#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace isdg::nn {

// Seeded generator with library-independent conversions, so corpora and
// initializations are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename V>
  void shuffle(std::vector<V>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[static_cast<std::size_t>(next() % i)]);
    }
  }

  template <typename V>
  const V& pick(const std::vector<V>& items) {
    return items[static_cast<std::size_t>(next() % items.size())];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace isdg::nn
