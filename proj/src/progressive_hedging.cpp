#include "nph/progressive_hedging.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "nph/cvar.hpp"

namespace nph {

PolicyMapping blend_step(const PolicyMapping& expert, const PolicyMapping& projected,
                         double kappa) {
  if (expert.values.size() != projected.values.size()) {
    throw std::invalid_argument("blend_step: shape mismatch");
  }
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw std::invalid_argument("blend_step: kappa outside [0, 1]");
  }
  if (kappa == 0.0) return projected;
  if (kappa == 1.0) return expert;
  PolicyMapping out = projected;
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = kappa * expert.values[k] + (1.0 - kappa) * projected.values[k];
  }
  return out;
}

Multipliers update_multipliers(const Multipliers& mult, const PolicyMapping& x_hat,
                               const PolicyMapping& x_next,
                               std::span<const double> y_hat, double y_next,
                               double penalty_nu) {
  if (x_hat.values.size() != x_next.values.size() ||
      x_hat.values.size() != mult.lambda.values.size()) {
    throw std::invalid_argument("update_multipliers: shape mismatch");
  }
  if (!y_hat.empty() && y_hat.size() != mult.u.size()) {
    throw std::invalid_argument("update_multipliers: y_hat size mismatch");
  }
  Multipliers out = mult;
  for (std::size_t k = 0; k < out.lambda.values.size(); ++k) {
    out.lambda.values[k] += penalty_nu * (x_hat.values[k] - x_next.values[k]);
  }
  if (!y_hat.empty()) {
    for (std::size_t s = 0; s < out.u.size(); ++s) {
      out.u[s] += penalty_nu * (y_hat[s] - y_next);
      out.y[s] = y_next;
    }
  }
  return out;
}

double convergence_delta(const PolicyMapping& x_hat, const PolicyMapping& x_prev,
                         std::span<const double> y_hat,
                         std::span<const double> y_prev,
                         const ProbabilityWeightedNorm& norm) {
  if (x_hat.values.size() != x_prev.values.size()) {
    throw std::invalid_argument("convergence_delta: shape mismatch");
  }
  PolicyMapping gap = x_hat;
  for (std::size_t k = 0; k < gap.values.size(); ++k) gap.values[k] -= x_prev.values[k];
  double delta = norm.mapping_norm(gap);
  if (!y_hat.empty()) {
    if (y_hat.size() != y_prev.size()) {
      throw std::invalid_argument("convergence_delta: y size mismatch");
    }
    std::vector<double> ygap(y_hat.size());
    for (std::size_t s = 0; s < y_hat.size(); ++s) ygap[s] = y_hat[s] - y_prev[s];
    delta += norm.scalar_norm(ygap);
  }
  return delta;
}

PHSolution run_ph_guided(const ProblemSpec& problem, const ScenarioTree& tree,
                         const PolicyMapping& start, const PHConfig& config,
                         const PolicyMapping* expert,
                         const std::function<double(int)>& kappa_at,
                         const PHTraceFn& trace) {
  if (!start.shape_matches(tree)) {
    throw std::invalid_argument("run_ph: start mapping does not match the tree");
  }
  if (expert && !expert->shape_matches(tree)) {
    throw std::invalid_argument("run_ph: expert mapping does not match the tree");
  }
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("run_ph: epsilon must be > 0");
  if (!(config.penalty_nu > 0.0)) throw std::invalid_argument("run_ph: penalty_nu must be > 0");
  if (config.alpha && !(*config.alpha >= 0.0 && *config.alpha < 1.0)) {
    throw std::invalid_argument("run_ph: alpha outside [0, 1)");
  }
  if (!problem.objective || !problem.project_scenario) {
    throw std::invalid_argument("run_ph: problem lacks objective or projector");
  }

  const int S = tree.num_scenarios();
  const int T = tree.num_stages();
  const int n = tree.action_dim();
  const bool use_cvar = config.alpha.has_value();
  const ProbabilityWeightedNorm norm(tree);

  PolicyMapping x = start;
  Multipliers mult = Multipliers::zeros_like(tree);
  double nu = config.penalty_nu;

  PHSolution sol;
  PolicyMapping x_hat(S, T, n);
  std::vector<double> y_hat(S, 0.0);
  const std::span<const double> no_y;

  bool converged = false;
  int iterations = 0;
  for (int iter = 1; iter <= config.max_outer_iterations; ++iter) {
    iterations = iter;
    // step 1: augmented scenario solves around the current iterate
    for (int s = 0; s < S; ++s) {
      ScenarioSubproblem sub;
      sub.objective = [&problem, s](std::span<const double> xs, std::span<double> g) {
        return problem.objective(s, xs, g);
      };
      sub.smooth = problem.smooth;
      sub.feasible_projector = [&problem, s](std::span<double> xs) {
        problem.project_scenario(s, xs);
      };
      auto anchor = x.scenario_block(s);
      auto lam = mult.lambda.scenario_block(s);
      sub.x_anchor.assign(anchor.begin(), anchor.end());
      sub.lambda.assign(lam.begin(), lam.end());
      sub.penalty_nu = nu;
      if (use_cvar) sub.cvar = CvarTerms{*config.alpha, mult.y[s], mult.u[s]};
      if (problem.restart_hints) sub.restart_points = problem.restart_hints(s);
      if (expert && problem.nonconvex) {
        auto xe = expert->scenario_block(s);
        sub.restart_points.emplace_back(xe.begin(), xe.end());
      }
      const SubproblemResult res = use_cvar ? solve_subproblem_cvar(sub, config.budget)
                                            : solve_subproblem(sub, config.budget);
      auto dst = x_hat.scenario_block(s);
      std::copy(res.x.begin(), res.x.end(), dst.begin());
      y_hat[s] = res.y;
    }
    if (!x_hat.all_finite()) {
      throw std::runtime_error(
          "progressive hedging: non-finite iterates (penalty too small or divergent objective)");
    }

    // step 2: implementable iterate (projection, optional expert blending)
    PolicyMapping x_proj = project_nonanticipative(tree, x_hat);
    double kappa = kappa_at ? kappa_at(iter) : 0.0;
    if (kappa < 0.0 || kappa > 1.0) {
      throw std::invalid_argument("run_ph: kappa outside [0, 1]");
    }
    PolicyMapping x_next = expert ? blend_step(*expert, x_proj, kappa) : x_proj;
    double y_next = 0.0;
    if (use_cvar) {
      for (int s = 0; s < S; ++s) y_next += tree.scenario_probability(s) * y_hat[s];
    }

    // step 3: multiplier updates. The dual step always uses the unblended
    // projection so increments stay orthogonal to the nonanticipative
    // subspace; blending steers only the primal anchor. A blended dual step
    // would tilt the fixed point away from the optimum.
    Multipliers next_mult = update_multipliers(
        mult, x_hat, x_proj, use_cvar ? std::span<const double>(y_hat) : no_y, y_next, nu);

    // step 5: convergence test against the pre-update iterate
    const double delta = convergence_delta(
        x_hat, x, use_cvar ? std::span<const double>(y_hat) : no_y,
        use_cvar ? std::span<const double>(mult.y) : no_y, norm);
    sol.delta_history.push_back(delta);

    double dual_gap = 0.0;
    if (config.adaptive_penalty) {
      PolicyMapping diff = x_next;
      for (std::size_t k = 0; k < diff.values.size(); ++k) diff.values[k] -= x.values[k];
      dual_gap = norm.mapping_norm(diff);
    }

    if (trace) {
      std::vector<double> f(S);
      for (int s = 0; s < S; ++s) f[s] = problem.objective(s, x_next.scenario_block(s), {});
      double obj = 0.0;
      if (use_cvar) {
        std::vector<double> q(S);
        for (int s = 0; s < S; ++s) q[s] = tree.scenario_probability(s);
        obj = cvar(f, q, *config.alpha);
      } else {
        for (int s = 0; s < S; ++s) obj += tree.scenario_probability(s) * f[s];
      }
      trace(PHIterationRecord{iter, delta, obj, nu, kappa});
    }
    if (config.record_history) {
      sol.history.push_back(PHHistoryEntry{x_next, next_mult, x_hat, x_proj, y_hat, kappa});
    }

    x = std::move(x_next);
    mult = std::move(next_mult);

    if (delta <= config.epsilon) {
      converged = true;
      break;
    }

    // step 4: optional penalty adaptation from the primal/dual gap ratio
    if (config.adaptive_penalty) {
      PolicyMapping pg = x_hat;
      for (std::size_t k = 0; k < pg.values.size(); ++k) pg.values[k] -= x_proj.values[k];
      const double primal_gap = norm.mapping_norm(pg);
      if (primal_gap > 10.0 * dual_gap) {
        nu *= 1.5;
      } else if (dual_gap > 10.0 * primal_gap) {
        nu /= 1.5;
      }
    }
  }

  sol.x_star = std::move(x);
  sol.y_star = mult.y;
  sol.multipliers = std::move(mult);
  sol.iterations = iterations;
  sol.converged = converged;

  std::vector<double> f(S), q(S);
  for (int s = 0; s < S; ++s) {
    f[s] = problem.objective(s, sol.x_star.scenario_block(s), {});
    q[s] = tree.scenario_probability(s);
  }
  if (use_cvar) {
    sol.objective_value = cvar(f, q, *config.alpha);
  } else {
    double obj = 0.0;
    for (int s = 0; s < S; ++s) obj += q[s] * f[s];
    sol.objective_value = obj;
  }
  return sol;
}

PHSolution run_ph(const ProblemSpec& problem, const ScenarioTree& tree,
                  const PolicyMapping& start, const PHConfig& config,
                  const PHTraceFn& trace) {
  return run_ph_guided(problem, tree, start, config, nullptr, {}, trace);
}

}  // namespace nph
