#include "nph/toy.hpp"

#include <cmath>
#include <stdexcept>

#include "nph/projections.hpp"

namespace nph {

ScenarioTree ToyInstance::build_tree() const {
  const int S = static_cast<int>(scenarios.size());
  if (S < 1) throw std::invalid_argument("toy instance: no scenarios");
  std::vector<double> probs(S);
  std::vector<std::vector<double>> data(S);
  for (int s = 0; s < S; ++s) {
    probs[s] = scenarios[s].prob;
    if (static_cast<int>(scenarios[s].stage_costs.size()) != stages) {
      throw std::invalid_argument("toy instance: scenario " + std::to_string(s) +
                                  " has wrong stage count");
    }
  }
  return ScenarioTree::two_layer(S, stages, action_dim, 0, std::move(probs),
                                 std::move(data));
}

double ToyInstance::stage_cost(int s, int t, std::span<const double> xt) const {
  const ToyStageCost& c = scenarios[s].stage_costs[t];
  double total = 0.0;
  for (int j = 0; j < action_dim; ++j) {
    const double d = xt[j] - c.center[j];
    total += 0.5 * c.curvature[j] * d * d + c.linear[j] * xt[j];
  }
  return total;
}

ProblemSpec ToyInstance::build_problem() const {
  ProblemSpec spec;
  spec.stages = stages;
  spec.action_dim = action_dim;
  spec.smooth = true;

  const ToyInstance inst = *this;  // self-contained copy for the closures

  spec.objective = [inst](int s, std::span<const double> x, std::span<double> grad) {
    double total = 0.0;
    double disc = 1.0;
    for (int t = 0; t < inst.stages; ++t) {
      const ToyStageCost& c = inst.scenarios[s].stage_costs[t];
      for (int j = 0; j < inst.action_dim; ++j) {
        const std::size_t idx = static_cast<std::size_t>(t) * inst.action_dim + j;
        const double d = x[idx] - c.center[j];
        total += disc * (0.5 * c.curvature[j] * d * d + c.linear[j] * x[idx]);
        if (!grad.empty()) grad[idx] = disc * (c.curvature[j] * d + c.linear[j]);
      }
      disc *= inst.gamma;
    }
    return total;
  };

  const ToyConstraint cons = constraint;
  const int n = action_dim;
  const int T = stages;
  spec.project_scenario = [cons, n, T](int, std::span<double> x) {
    for (int t = 0; t < T; ++t) {
      auto xt = x.subspan(static_cast<std::size_t>(t) * n, n);
      if (cons.type == ToyConstraint::Type::box) {
        project_box(xt, cons.lo, cons.hi);
      } else {
        project_simplex(xt);
      }
    }
  };
  spec.project_first_stage = [cons, n](std::span<double> x1) {
    if (cons.type == ToyConstraint::Type::box) {
      project_box(x1, cons.lo, cons.hi);
    } else {
      project_simplex(x1);
    }
  };

  spec.transition = [](const std::vector<double>& st, std::span<const double>,
                       std::span<const double>) { return st; };
  spec.features = [n](const std::vector<double>&) { return std::vector<double>(n, 0.0); };

  return spec;
}

}  // namespace nph
