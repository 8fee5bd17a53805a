#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nph/policy.hpp"
#include "nph/problem_spec.hpp"
#include "nph/scenario_tree.hpp"
#include "nph/subproblem.hpp"

namespace nph {

struct PHConfig {
  double penalty_nu = 1.0;
  double epsilon = 1e-4;  // threshold on the probability-weighted gap delta
  int max_outer_iterations = 500;
  std::optional<double> alpha;  // CVaR level; empty = risk-neutral
  bool adaptive_penalty = false;
  SolverBudget budget;
  bool record_history = false;  // keep per-iteration iterates (for tests)
};

// One outer iteration as seen by convergence diagnostics and tests.
struct PHIterationRecord {
  int iteration = 0;
  double delta = 0.0;
  double objective = 0.0;
  double penalty = 0.0;
  double kappa = 0.0;
};

struct PHHistoryEntry {
  PolicyMapping x;       // implementable iterate after the update
  Multipliers mult;      // multipliers after the update (y holds y^{i+1})
  PolicyMapping x_hat;   // scenario solutions of the iteration
  PolicyMapping x_hat_projected;
  std::vector<double> y_hat;
  double kappa = 0.0;
};

struct PHSolution {
  PolicyMapping x_star;
  std::vector<double> y_star;  // per-scenario threshold values (CVaR runs)
  Multipliers multipliers;
  int iterations = 0;
  bool converged = false;
  std::vector<double> delta_history;
  double objective_value = 0.0;  // expectation, or CVaR for risk-averse runs
  std::vector<PHHistoryEntry> history;  // filled when record_history is set
};

using PHTraceFn = std::function<void(const PHIterationRecord&)>;

// Convex combination kappa * expert + (1 - kappa) * projected; the endpoints
// kappa = 0 and kappa = 1 return their argument unchanged.
PolicyMapping blend_step(const PolicyMapping& expert, const PolicyMapping& projected,
                         double kappa);

// lambda' = lambda + nu (x_hat - x_next); u' = u + nu (y_hat - y_next).
// y_next is the probability-weighted mean of y_hat and is broadcast into the
// returned y block. y_hat may be empty for risk-neutral updates.
Multipliers update_multipliers(const Multipliers& mult, const PolicyMapping& x_hat,
                               const PolicyMapping& x_next,
                               std::span<const double> y_hat, double y_next,
                               double penalty_nu);

// delta = ||x_hat - x_prev||_q + ||y_hat - y_prev||_q (either y span may be
// empty, contributing zero).
double convergence_delta(const PolicyMapping& x_hat, const PolicyMapping& x_prev,
                         std::span<const double> y_hat,
                         std::span<const double> y_prev,
                         const ProbabilityWeightedNorm& norm);

// Scenario-decomposed solve of min E[f~] (or CVaR_alpha[f~]) over G cap M:
// alternate per-scenario proximal solves, nonanticipative projection and
// multiplier updates until delta <= epsilon or the iteration cap.
PHSolution run_ph(const ProblemSpec& problem, const ScenarioTree& tree,
                  const PolicyMapping& start, const PHConfig& config,
                  const PHTraceFn& trace = {});

// Same loop with the iterate blended toward an expert mapping by a
// per-iteration weight kappa(i); kappa identically zero recovers run_ph
// exactly. Used by the rolling-horizon controller.
PHSolution run_ph_guided(const ProblemSpec& problem, const ScenarioTree& tree,
                         const PolicyMapping& start, const PHConfig& config,
                         const PolicyMapping* expert,
                         const std::function<double(int)>& kappa_at,
                         const PHTraceFn& trace = {});

}  // namespace nph
