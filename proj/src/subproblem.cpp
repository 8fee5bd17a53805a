#include "nph/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nph {

namespace {

struct YSolution {
  double y = 0.0;
  double hinge_weight = 0.0;  // coefficient of grad f in the reduced gradient
};

YSolution optimal_y_solution(double F, double y_anchor, double u_dual,
                             double penalty_nu, double alpha) {
  if (!(penalty_nu > 0.0)) throw std::invalid_argument("optimal_y: penalty_nu must be > 0");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("optimal_y: alpha outside [0, 1)");
  const double c = 1.0 / (1.0 - alpha);
  const double y_right = y_anchor - (1.0 + u_dual) / penalty_nu;   // hinge off
  if (y_right >= F) return {y_right, 0.0};
  const double y_left = y_anchor - (1.0 + u_dual - c) / penalty_nu;  // hinge active
  if (y_left <= F) return {y_left, c};
  return {F, 1.0 + u_dual + penalty_nu * (F - y_anchor)};
}

void validate_common(const ScenarioSubproblem& sub) {
  if (!sub.objective) throw std::invalid_argument("subproblem: missing objective");
  if (!sub.feasible_projector) throw std::invalid_argument("subproblem: missing projector");
  if (!(sub.penalty_nu > 0.0)) throw std::invalid_argument("subproblem: penalty_nu must be > 0");
  if (sub.lambda.size() != sub.x_anchor.size()) {
    throw std::invalid_argument("subproblem: lambda/x_anchor size mismatch");
  }
  if (sub.x_anchor.empty()) throw std::invalid_argument("subproblem: empty anchor");
}

// Augmented objective with the proximal, multiplier and (optionally) the
// partially minimized CVaR threshold terms folded in.
class AugmentedObjective {
 public:
  explicit AugmentedObjective(const ScenarioSubproblem& sub) : sub_(&sub) {}

  double value(std::span<const double> x) const { return evaluate(x, {}); }

  double value_and_gradient(std::span<const double> x, std::span<double> grad) const {
    return evaluate(x, grad);
  }

  double last_y() const { return last_y_; }

 private:
  double evaluate(std::span<const double> x, std::span<double> grad) const {
    std::vector<double> fgrad;
    std::span<double> fgrad_span;
    if (!grad.empty()) {
      fgrad.assign(x.size(), 0.0);
      fgrad_span = {fgrad.data(), fgrad.size()};
    }
    const double f = sub_->objective(x, fgrad_span);
    if (!std::isfinite(f)) throw std::runtime_error("subproblem: non-finite objective value");

    double total;
    double weight = 1.0;
    if (sub_->cvar) {
      const auto& cv = *sub_->cvar;
      const double c = 1.0 / (1.0 - cv.alpha);
      const YSolution ys =
          optimal_y_solution(f, cv.y_anchor, cv.u_dual, sub_->penalty_nu, cv.alpha);
      last_y_ = ys.y;
      weight = ys.hinge_weight;
      const double dy = ys.y - cv.y_anchor;
      total = ys.y + c * std::max(0.0, f - ys.y) + cv.u_dual * ys.y +
              0.5 * sub_->penalty_nu * dy * dy;
    } else {
      total = f;
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double dx = x[j] - sub_->x_anchor[j];
      total += sub_->lambda[j] * x[j] + 0.5 * sub_->penalty_nu * dx * dx;
      if (!grad.empty()) {
        grad[j] = weight * fgrad[j] + sub_->lambda[j] + sub_->penalty_nu * dx;
      }
    }
    if (!std::isfinite(total)) throw std::runtime_error("subproblem: non-finite objective value");
    return total;
  }

  const ScenarioSubproblem* sub_;
  mutable double last_y_ = 0.0;
};

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

SubproblemResult minimize_from(const ScenarioSubproblem& sub, const SolverBudget& budget,
                               std::span<const double> start, bool use_gradient) {
  const AugmentedObjective phi(sub);
  const std::size_t n = sub.x_anchor.size();

  std::vector<double> x(start.begin(), start.end());
  sub.feasible_projector({x.data(), n});

  std::vector<double> grad(n), trial(n);
  SubproblemResult best;
  best.x = x;
  best.augmented_objective = phi.value_and_gradient({x.data(), n}, {grad.data(), n});
  best.y = phi.last_y();

  double fx = best.augmented_objective;
  double step = 1.0 / sub.penalty_nu;
  const double step_floor = 1e-18;
  int k = 0;
  for (k = 1; k <= budget.max_iterations; ++k) {
    if (use_gradient) {
      // projected gradient with a backtracking majorization test
      bool accepted = false;
      double move2 = 0.0, ftrial = 0.0;
      while (step >= step_floor) {
        double gd = 0.0;
        move2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) trial[j] = x[j] - step * grad[j];
        sub.feasible_projector({trial.data(), n});
        for (std::size_t j = 0; j < n; ++j) {
          const double d = trial[j] - x[j];
          gd += grad[j] * d;
          move2 += d * d;
        }
        if (move2 == 0.0) break;  // stationary point of the projected step
        ftrial = phi.value({trial.data(), n});
        if (ftrial <= fx + gd + move2 / (2.0 * step) + 1e-15 * (1.0 + std::abs(fx))) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      x.swap(trial);
      fx = phi.value_and_gradient({x.data(), n}, {grad.data(), n});
      if (fx < best.augmented_objective) {
        best.augmented_objective = fx;
        best.x = x;
        best.y = phi.last_y();
      }
      step *= 1.5;
      if (std::sqrt(move2) <= budget.tolerance * (1.0 + norm2({x.data(), n}))) break;
    } else {
      // c/sqrt(k) projected subgradient with normalized step length, best
      // iterate kept; re-centering on the best point polishes locally
      const double gnorm = norm2({grad.data(), n});
      if (gnorm == 0.0) break;
      const double stepk =
          (1.0 / sub.penalty_nu) / (std::sqrt(static_cast<double>(k)) * std::max(1.0, gnorm));
      for (std::size_t j = 0; j < n; ++j) x[j] -= stepk * grad[j];
      sub.feasible_projector({x.data(), n});
      fx = phi.value_and_gradient({x.data(), n}, {grad.data(), n});
      if (fx < best.augmented_objective) {
        best.augmented_objective = fx;
        best.x = x;
        best.y = phi.last_y();
      } else if (k % 20 == 0) {
        x = best.x;
        fx = phi.value_and_gradient({x.data(), n}, {grad.data(), n});
      }
    }
  }
  best.iterations = std::min(k, budget.max_iterations);
  // report the y that is exactly optimal for the returned x
  if (sub.cvar) {
    const double f = sub.objective({best.x.data(), n}, {});
    best.y = optimal_y_solution(f, sub.cvar->y_anchor, sub.cvar->u_dual,
                                sub.penalty_nu, sub.cvar->alpha).y;
  }
  return best;
}

SubproblemResult solve(const ScenarioSubproblem& sub, const SolverBudget& budget) {
  validate_common(sub);
  if (budget.max_iterations < 1) throw std::invalid_argument("subproblem: max_iterations < 1");
  if (budget.tolerance < 0.0) throw std::invalid_argument("subproblem: negative tolerance");

  bool use_gradient;
  switch (budget.step_rule) {
    case StepRule::proximal_gradient: use_gradient = true; break;
    case StepRule::subgradient: use_gradient = false; break;
    default: use_gradient = sub.smooth; break;
  }

  SubproblemResult best = minimize_from(
      sub, budget, {sub.x_anchor.data(), sub.x_anchor.size()}, use_gradient);
  for (const auto& start : sub.restart_points) {
    if (start.size() != sub.x_anchor.size()) {
      throw std::invalid_argument("subproblem: restart point size mismatch");
    }
    SubproblemResult cand =
        minimize_from(sub, budget, {start.data(), start.size()}, use_gradient);
    if (cand.augmented_objective < best.augmented_objective) best = std::move(cand);
  }
  return best;
}

}  // namespace

double optimal_y_given_x(double F, double y_anchor, double u_dual,
                         double penalty_nu, double alpha) {
  return optimal_y_solution(F, y_anchor, u_dual, penalty_nu, alpha).y;
}

SubproblemResult solve_subproblem(const ScenarioSubproblem& sub,
                                  const SolverBudget& budget) {
  if (sub.cvar) {
    throw std::invalid_argument("solve_subproblem: cvar terms present, use solve_subproblem_cvar");
  }
  return solve(sub, budget);
}

SubproblemResult solve_subproblem_cvar(const ScenarioSubproblem& sub,
                                       const SolverBudget& budget) {
  if (!sub.cvar) {
    throw std::invalid_argument("solve_subproblem_cvar: cvar terms missing");
  }
  if (!(sub.cvar->alpha >= 0.0 && sub.cvar->alpha < 1.0)) {
    throw std::invalid_argument("solve_subproblem_cvar: alpha outside [0, 1)");
  }
  return solve(sub, budget);
}

}  // namespace nph
