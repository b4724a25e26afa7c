#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mstm/tensor.hpp"

namespace mstm {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_central = 0.0;
};

// Central-difference verification of the tape. `f` builds the scalar loss on
// the given tape from the current values of `params`; the error per
// coordinate is |analytic − central| / (1 + |central|) and the maximum over
// all coordinates is returned. NaN from `f` propagates into the result.
GradCheckResult finite_diff_check(const std::function<Tensor(Tape&)>& f,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  double h);

}  // namespace mstm
