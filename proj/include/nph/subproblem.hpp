#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace nph {

// Step rule for the scenario solves: projected gradient with backtracking
// when the objective is smooth, c/sqrt(k) projected subgradient otherwise.
enum class StepRule { automatic, subgradient, proximal_gradient };

struct SolverBudget {
  int max_iterations = 200;
  double tolerance = 1e-8;  // stop when the iterate moves less than this
  StepRule step_rule = StepRule::automatic;
};

struct CvarTerms {
  double alpha = 0.0;     // risk level in [0, 1)
  double y_anchor = 0.0;  // proximal center for the threshold variable
  double u_dual = 0.0;    // multiplier on y
};

// Augmented problem of one scenario:
//   min_{x in G}  f(x) + <lambda, x> + (nu/2) ||x - x_anchor||^2
// plus, when cvar is set, the threshold variable y of the risk reformulation:
//   y + 1/(1-alpha) max{0, f(x) - y} + u y + (nu/2)(y - y_anchor)^2.
struct ScenarioSubproblem {
  // evaluates f(x); when grad is nonempty, writes a (sub)gradient into it
  std::function<double(std::span<const double> x, std::span<double> grad)> objective;
  bool smooth = true;
  std::function<void(std::span<double> x)> feasible_projector;
  std::vector<double> lambda;
  std::vector<double> x_anchor;
  double penalty_nu = 1.0;
  std::optional<CvarTerms> cvar;
  // extra starting points beyond the anchor (nonconvex instances)
  std::vector<std::vector<double>> restart_points;
};

struct SubproblemResult {
  std::vector<double> x;
  double y = 0.0;                   // threshold minimizer (CVaR solves only)
  double augmented_objective = 0.0;
  int iterations = 0;
};

// Risk-neutral scenario solve; sub.cvar must be empty.
SubproblemResult solve_subproblem(const ScenarioSubproblem& sub,
                                  const SolverBudget& budget);

// CVaR scenario solve; y is minimized exactly in closed form at every x, and
// the x block follows the projected (sub)gradient of the reduced objective.
SubproblemResult solve_subproblem_cvar(const ScenarioSubproblem& sub,
                                       const SolverBudget& budget);

// Exact minimizer of
//   h(y) = y + 1/(1-alpha) max(0, F - y) + u y + (nu/2)(y - y_anchor)^2:
// one quadratic piece on each side of the kink at y = F; the valid piece
// minimizer wins and the kink is the fallback.
double optimal_y_given_x(double F, double y_anchor, double u_dual,
                         double penalty_nu, double alpha);

}  // namespace nph
