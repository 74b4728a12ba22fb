#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "isdg/nn/params.hpp"

namespace isdg::nn {

// Evaluates a scalar loss. When with_grad is set it must also run backward()
// so that Parameter::grad holds d(loss)/d(param); the checker zeroes
// gradients beforehand.
using LossFn = std::function<double(ModelState<double>& state, bool with_grad)>;

struct GradCheckOptions {
  double eps = 1e-5;
  std::size_t coordinates_per_group = 64;  // groups at or below this size are checked fully
  std::uint64_t seed = 1;
  std::vector<std::string> groups;  // empty = every group
  double denominator_floor = 1e-5;  // tiny gradients are compared absolutely at floor * tolerance
};

struct GroupCheck {
  std::size_t coordinates = 0;
  double max_rel_error = 0;
};

struct GradCheckResult {
  double max_rel_error = 0;
  std::string worst_group;
  std::size_t worst_index = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
  std::map<std::string, GroupCheck> per_group;
};

// Central differences (f(p+eps) - f(p-eps)) / 2 eps per sampled coordinate,
// compared through |a - n| / max(|a|, |n|, floor). Throws on a non-finite loss.
GradCheckResult finite_diff_check(ModelState<double>& state, const LossFn& loss,
                                  const GradCheckOptions& options = {});

}  // namespace isdg::nn
