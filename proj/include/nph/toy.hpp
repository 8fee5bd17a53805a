#pragma once

#include <vector>

#include "nph/problem_spec.hpp"
#include "nph/scenario_tree.hpp"

namespace nph {

// Separable quadratic stage cost 0.5 * sum_j curv_j (x_j - center_j)^2
// + sum_j lin_j x_j.
struct ToyStageCost {
  std::vector<double> curvature;
  std::vector<double> center;
  std::vector<double> linear;
};

struct ToyScenario {
  double prob = 1.0;
  std::vector<ToyStageCost> stage_costs;  // one per stage
};

struct ToyConstraint {
  enum class Type { box, simplex };
  Type type = Type::box;
  double lo = 0.0;
  double hi = 1.0;
};

// Stage-separable quadratic instance on a root-branching tree; the workbench
// for solver and hedging checks against independent oracles.
struct ToyInstance {
  int stages = 1;
  int action_dim = 1;
  double gamma = 1.0;
  ToyConstraint constraint;
  std::vector<ToyScenario> scenarios;

  ScenarioTree build_tree() const;
  ProblemSpec build_problem() const;

  double stage_cost(int s, int t, std::span<const double> xt) const;
};

}  // namespace nph
