#include "isdg/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "isdg/nn/random.hpp"

namespace isdg::nn {
namespace {

double finite_or_throw(double v) {
  if (!std::isfinite(v)) throw std::runtime_error("finite_diff_check: loss is not finite");
  return v;
}

}  // namespace

GradCheckResult finite_diff_check(ModelState<double>& state, const LossFn& loss,
                                  const GradCheckOptions& options) {
  state.zero_grad();
  finite_or_throw(loss(state, true));
  GradCheckResult result;
  Rng rng(options.seed);
  for (auto& p : state) {
    if (!options.groups.empty() &&
        std::find(options.groups.begin(), options.groups.end(), p.name) == options.groups.end()) {
      continue;
    }
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.coordinates_per_group) {
      rng.shuffle(coords);
      coords.resize(options.coordinates_per_group);
      std::sort(coords.begin(), coords.end());
    }
    GroupCheck& group = result.per_group[p.name];
    for (std::size_t k : coords) {
      const double saved = p.value[k];
      p.value[k] = saved + options.eps;
      const double up = finite_or_throw(loss(state, false));
      p.value[k] = saved - options.eps;
      const double down = finite_or_throw(loss(state, false));
      p.value[k] = saved;
      const double numeric = (up - down) / (2 * options.eps);
      const double analytic = p.grad[k];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++group.coordinates;
      group.max_rel_error = std::max(group.max_rel_error, rel);
      if (rel > result.max_rel_error || result.worst_group.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        result.worst_group = p.name;
        result.worst_index = k;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace isdg::nn
