#include "nph/np_controller.hpp"

#include <cmath>
#include <stdexcept>

#include "nph/rng.hpp"

namespace nph {

namespace {

constexpr std::uint64_t kTreeStream = 0x7265cafe;
constexpr std::uint64_t kStepStream = 0x51e9d1ce;

}  // namespace

double kappa_schedule(const KappaSchedule& schedule, int i) {
  if (i < 1) throw std::invalid_argument("kappa_schedule: iteration must be >= 1");
  switch (schedule.mode) {
    case KappaSchedule::Mode::imitation: {
      if (schedule.i_hat < 1) throw std::invalid_argument("kappa_schedule: i_hat must be >= 1");
      if (i >= schedule.i_hat) return 0.0;
      const double base = 1.0 + static_cast<double>(i);
      return 1.0 / (base * base);
    }
    case KappaSchedule::Mode::warm_start:
      return i == 1 ? 1.0 : 0.0;
    case KappaSchedule::Mode::constant:
      if (schedule.constant_value < 0.0 || schedule.constant_value > 1.0) {
        throw std::invalid_argument("kappa_schedule: constant value outside [0, 1]");
      }
      return schedule.constant_value;
  }
  throw std::logic_error("kappa_schedule: unknown mode");
}

NPStepResult run_np_step(const std::vector<double>& state, const Expert& expert,
                         const ProblemSpec& problem, const ScenarioTree& tree,
                         const NPConfig& config, const PHTraceFn& trace) {
  const PolicyMapping x_pi = query_expert(expert, state, tree, problem);
  const auto kappa_fn = [&config](int i) { return kappa_schedule(config.kappa, i); };
  PHSolution sol = run_ph_guided(problem, tree, x_pi, config.ph, &x_pi, kappa_fn, trace);

  auto first = sol.x_star.action(0, 0);
  std::vector<double> action(first.begin(), first.end());
  if (problem.project_first_stage) {
    problem.project_first_stage({action.data(), action.size()});
  }
  return NPStepResult{std::move(action), std::move(sol)};
}

Trajectory run_rolling_horizon(const Domain& domain, const Expert& expert,
                               const NPConfig& config, int steps, RunMode mode) {
  if (steps < 1) throw std::invalid_argument("run_rolling_horizon: steps must be >= 1");
  NPConfig cfg = config;
  if (mode == RunMode::pure_sp) {
    cfg.kappa = KappaSchedule{KappaSchedule::Mode::constant, 1, 0.0};
  }

  Trajectory traj;
  traj.steps.reserve(steps);
  std::vector<double> state = domain.initial_state();
  for (int tau = 1; tau <= steps; ++tau) {
    TrajectoryStep rec;
    rec.step = tau;
    rec.state = state;

    const ScenarioTree tree = domain.sample_tree(
        state, cfg.n_scenarios, cfg.lookahead_stages, mix_seed(cfg.seed, kTreeStream, tau));
    const ProblemSpec problem = domain.make_problem(state, tree, cfg.discount_gamma);

    if (mode == RunMode::expert_only) {
      bool saturated = false;
      rec.action = expert.act(state, problem, &saturated);
      if (saturated) rec.notes.push_back("cash_reserve_saturated");
      rec.inner_iterations = 0;
      rec.converged = true;
    } else {
      NPStepResult res = run_np_step(state, expert, problem, tree, cfg);
      rec.action = std::move(res.action);
      rec.inner_iterations = res.solution.iterations;
      rec.converged = res.solution.converged;
      if (!res.solution.converged) rec.notes.push_back("inner_loop_hit_iteration_cap");
    }

    StepOutcome out = domain.step(state, {rec.action.data(), rec.action.size()},
                                  mix_seed(cfg.seed, kStepStream, tau));
    rec.realized = std::move(out.realized);
    rec.reward = out.reward;
    rec.residuals = std::move(out.residuals);
    traj.steps.push_back(std::move(rec));
    state = std::move(out.next_state);
  }
  return traj;
}

}  // namespace nph
