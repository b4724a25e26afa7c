#include "mstm/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace mstm {

GradCheckResult finite_diff_check(const std::function<Tensor(Tape&)>& f,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: step h must be positive");

  for (auto& [name, p] : params) {
    (void)name;
    p.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = f(tape);
    tape.backward(loss);
  }
  analytic.reserve(params.size());
  for (auto& [name, p] : params) {
    (void)name;
    analytic.push_back(p.grad_copy());
  }

  auto eval = [&f]() {
    Tape tape;
    return f(tape).item();
  };

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi].second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double lp = eval();
      p.data()[i] = saved - h;
      const double lm = eval();
      p.data()[i] = saved;
      const double central = (lp - lm) / (2.0 * h);
      const double err = std::fabs(analytic[pi][i] - central) / (1.0 + std::fabs(central));
      // `!(err <= max)` keeps NaN: a NaN error must win and surface as failure.
      if (!(err <= res.max_rel_err)) {
        res.max_rel_err = err;
        res.worst_param = params[pi].first;
        res.worst_index = i;
        res.worst_analytic = analytic[pi][i];
        res.worst_central = central;
      }
    }
  }
  return res;
}

}  // namespace mstm
