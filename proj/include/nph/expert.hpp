#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nph/policy.hpp"
#include "nph/problem_spec.hpp"
#include "nph/scenario_tree.hpp"

namespace nph {

enum class ExpertKind { uniform, fixed_weights, affine, reserve_wrapped };

// Offline policy queried to seed and guide the hedging loop. All variants
// emit actions on the simplex; affine outputs are simplex-projected.
class Expert {
 public:
  static Expert uniform(int action_dim);
  static Expert fixed_weights(std::vector<double> weights);
  static Expert affine(int feature_dim, int action_dim,
                       std::vector<double> weights_row_major,
                       std::vector<double> bias);
  // floors the liquid coordinate of base at the demand reserve and rescales
  // the rest; asset 0 is the liquid one
  static Expert reserve_wrapped(Expert base, double mu_l, double sigma_l);

  ExpertKind kind() const { return kind_; }
  int action_dim() const { return action_dim_; }
  int feature_dim() const { return feature_dim_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }
  double mu_l() const { return mu_l_; }
  double sigma_l() const { return sigma_l_; }

  // single action at a state; reserve_saturated reports a reserve above the
  // whole wealth (everything goes liquid then)
  std::vector<double> act(const std::vector<double>& state, const ProblemSpec& problem,
                          bool* reserve_saturated = nullptr) const;

 private:
  Expert() = default;

  ExpertKind kind_ = ExpertKind::uniform;
  int action_dim_ = 0;
  int feature_dim_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
  std::shared_ptr<const Expert> base_;
  double mu_l_ = 0.0;
  double sigma_l_ = 0.0;
};

// Rolls the expert forward through the transition along every scenario and
// projects the result onto the nonanticipative subspace (a no-op for
// state-feedback policies).
PolicyMapping query_expert(const Expert& expert, const std::vector<double>& state,
                           const ScenarioTree& tree, const ProblemSpec& problem);

// cash floored at rho, remaining coordinates rescaled to the leftover mass
std::vector<double> apply_cash_reserve(std::span<const double> base_action, double rho);

Expert load_affine_expert(const std::string& path);
void save_affine_expert(const Expert& expert, const std::string& path);

}  // namespace nph
