#include "nph/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "nph/scenario_tree.hpp"

namespace nph {

PolicyMapping PolicyMapping::zeros_like(const ScenarioTree& tree) {
  return PolicyMapping(tree.num_scenarios(), tree.num_stages(), tree.action_dim());
}

bool PolicyMapping::shape_matches(const ScenarioTree& tree) const {
  return scenarios == tree.num_scenarios() && stages == tree.num_stages() &&
         dim == tree.action_dim();
}

bool PolicyMapping::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Multipliers Multipliers::zeros_like(const ScenarioTree& tree) {
  Multipliers m;
  m.lambda = PolicyMapping::zeros_like(tree);
  m.u.assign(tree.num_scenarios(), 0.0);
  m.y.assign(tree.num_scenarios(), 0.0);
  return m;
}

bool Multipliers::all_finite() const {
  if (!lambda.all_finite()) return false;
  for (double v : u) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : y) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double ProbabilityWeightedNorm::mapping_norm(const PolicyMapping& x) const {
  return std::sqrt(mapping_inner(x, x));
}

double ProbabilityWeightedNorm::mapping_inner(const PolicyMapping& a,
                                              const PolicyMapping& b) const {
  if (!a.shape_matches(*tree_) || !b.shape_matches(*tree_)) {
    throw std::invalid_argument("probability-weighted inner product: shape mismatch");
  }
  double total = 0.0;
  const int S = a.scenarios;
  for (int s = 0; s < S; ++s) {
    const double q = tree_->scenario_probability(s);
    auto xa = a.scenario_block(s);
    auto xb = b.scenario_block(s);
    double dot = 0.0;
    for (std::size_t k = 0; k < xa.size(); ++k) dot += xa[k] * xb[k];
    total += q * dot;
  }
  return total;
}

double ProbabilityWeightedNorm::scalar_norm(std::span<const double> per_scenario) const {
  if (static_cast<int>(per_scenario.size()) != tree_->num_scenarios()) {
    throw std::invalid_argument("probability-weighted norm: scalar family size mismatch");
  }
  double total = 0.0;
  for (int s = 0; s < tree_->num_scenarios(); ++s) {
    total += tree_->scenario_probability(s) * per_scenario[s] * per_scenario[s];
  }
  return std::sqrt(total);
}

}  // namespace nph
