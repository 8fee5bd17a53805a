#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nph/expert.hpp"
#include "nph/problem_spec.hpp"
#include "nph/progressive_hedging.hpp"
#include "nph/scenario_tree.hpp"

namespace nph {

// Per-iteration blending weight between the expert mapping and the projected
// hedging iterate. Imitation decays as (1+i)^-2 and cuts off at i_hat;
// warm start uses the expert only at the first iteration.
struct KappaSchedule {
  enum class Mode { imitation, warm_start, constant };
  Mode mode = Mode::imitation;
  int i_hat = 20;
  double constant_value = 0.0;
};

double kappa_schedule(const KappaSchedule& schedule, int i);

struct NPConfig {
  PHConfig ph;
  KappaSchedule kappa;
  int lookahead_stages = 5;
  int n_scenarios = 50;
  double discount_gamma = 0.99;
  std::uint64_t seed = 0;
};

enum class RunMode { np, pure_sp, expert_only };

struct TrajectoryStep {
  int step = 0;
  std::vector<double> state;      // observed state before acting
  std::vector<double> action;     // executed first-stage action
  std::vector<double> realized;   // realized exogenous outcome
  double reward = 0.0;
  std::vector<double> residuals;  // constraint slacks after execution
  int inner_iterations = 0;
  bool converged = true;
  std::vector<std::string> notes;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
};

struct StepOutcome {
  std::vector<double> next_state;
  std::vector<double> realized;
  double reward = 0.0;
  std::vector<double> residuals;
};

// A decision domain: samples lookahead trees at a state, exposes the
// per-step optimization problem, and simulates realized transitions.
class Domain {
 public:
  virtual ~Domain() = default;
  virtual int action_dim() const = 0;
  virtual std::vector<double> initial_state() const = 0;
  virtual ScenarioTree sample_tree(const std::vector<double>& state, int n_scenarios,
                                   int stages, std::uint64_t seed) const = 0;
  virtual ProblemSpec make_problem(const std::vector<double>& state,
                                   const ScenarioTree& tree, double gamma) const = 0;
  virtual StepOutcome step(const std::vector<double>& state,
                           std::span<const double> action, std::uint64_t seed) const = 0;
};

struct NPStepResult {
  std::vector<double> action;  // common first-stage action, execution-projected
  PHSolution solution;
};

// One decision epoch: seed the loop with the expert mapping, run the blended
// hedging iterations to convergence (or the cap), return the first-stage
// action of the final implementable mapping.
NPStepResult run_np_step(const std::vector<double>& state, const Expert& expert,
                         const ProblemSpec& problem, const ScenarioTree& tree,
                         const NPConfig& config, const PHTraceFn& trace = {});

// Observe, re-solve, execute the first-stage action, repeat. Scenario trees
// are resampled per step from seeds derived only from (config.seed, step),
// so realized draws do not depend on the scenario count or the mode.
Trajectory run_rolling_horizon(const Domain& domain, const Expert& expert,
                               const NPConfig& config, int steps,
                               RunMode mode = RunMode::np);

}  // namespace nph
