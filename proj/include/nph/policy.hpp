#pragma once

#include <span>
#include <vector>

namespace nph {

class ScenarioTree;

// Per-scenario action sequences: one vector in R^dim for every
// (scenario, stage) pair. This is the central iterate of the hedging loop.
struct PolicyMapping {
  int scenarios = 0;
  int stages = 0;
  int dim = 0;
  std::vector<double> values;  // (s, t, j) row-major

  PolicyMapping() = default;
  PolicyMapping(int scenarios_, int stages_, int dim_)
      : scenarios(scenarios_), stages(stages_), dim(dim_),
        values(static_cast<std::size_t>(scenarios_) * stages_ * dim_, 0.0) {}

  static PolicyMapping zeros_like(const ScenarioTree& tree);

  double& at(int s, int t, int j) {
    return values[(static_cast<std::size_t>(s) * stages + t) * dim + j];
  }
  double at(int s, int t, int j) const {
    return values[(static_cast<std::size_t>(s) * stages + t) * dim + j];
  }
  // stage-t action of scenario s, t is 0-based here
  std::span<double> action(int s, int t) {
    return {values.data() + (static_cast<std::size_t>(s) * stages + t) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> action(int s, int t) const {
    return {values.data() + (static_cast<std::size_t>(s) * stages + t) * dim,
            static_cast<std::size_t>(dim)};
  }
  // full T*dim block of scenario s
  std::span<double> scenario_block(int s) {
    return {values.data() + static_cast<std::size_t>(s) * stages * dim,
            static_cast<std::size_t>(stages) * dim};
  }
  std::span<const double> scenario_block(int s) const {
    return {values.data() + static_cast<std::size_t>(s) * stages * dim,
            static_cast<std::size_t>(stages) * dim};
  }

  bool shape_matches(const ScenarioTree& tree) const;
  bool all_finite() const;
};

// Dual state of the hedging loop. lambda mirrors the policy mapping; u and y
// carry one scalar per scenario and are only active in CVaR runs. All parts
// start at zero at the beginning of every outer decision step.
struct Multipliers {
  PolicyMapping lambda;
  std::vector<double> u;
  std::vector<double> y;

  static Multipliers zeros_like(const ScenarioTree& tree);
  bool all_finite() const;
};

// Norm induced by the scenario-probability-weighted inner product
// <x, w> = sum_s q_s sum_t <x_t(s), w_t(s)>.
class ProbabilityWeightedNorm {
 public:
  explicit ProbabilityWeightedNorm(const ScenarioTree& tree) : tree_(&tree) {}

  double mapping_norm(const PolicyMapping& x) const;
  double mapping_inner(const PolicyMapping& a, const PolicyMapping& b) const;
  // norm of a per-scenario scalar family (used for the y and u blocks)
  double scalar_norm(std::span<const double> per_scenario) const;

  const ScenarioTree& tree() const { return *tree_; }

 private:
  const ScenarioTree* tree_;
};

}  // namespace nph
