#pragma once

// Independent reference computations for tests. Everything here solves by
// exhaustive evaluation (iterative grid refinement), never by the library's
// own solver path.

#include <functional>
#include <span>
#include <vector>

#include "nph/toy.hpp"

namespace nph::oracle {

struct GridResult {
  std::vector<double> x;
  double value = 0.0;
};

// Iterative grid refinement over a box; final resolution <= final_step per
// coordinate. Exact global minimum for convex objectives.
GridResult refine_grid_min_box(const std::function<double(std::span<const double>)>& f,
                               std::vector<double> lo, std::vector<double> hi,
                               double final_step);

// Same over the probability simplex in n coordinates (n - 1 free variables).
GridResult refine_grid_min_simplex(const std::function<double(std::span<const double>)>& f,
                                   int n, double final_step);

// 1-D refinement on [lo, hi].
GridResult refine_grid_min_1d(const std::function<double(double)>& f, double lo,
                              double hi, double final_step);

// CVaR via a dense y grid over [min value - 1, max value + 1].
double cvar_grid(std::span<const double> values, std::span<const double> probs,
                 double alpha, double final_step = 1e-9);

struct ExtensiveSolution {
  std::vector<std::vector<double>> stage1;            // shared action
  std::vector<std::vector<std::vector<double>>> tail; // [scenario][stage>=2]
  double objective = 0.0;
};

// Extensive-form optimum of a root-branching toy instance by per-block grid
// refinement (stage costs are separable, so the blocks decouple).
ExtensiveSolution solve_toy_extensive(const ToyInstance& inst, double final_step = 5e-5);

// maximum drawdown by checking every peak/trough pair
double mdd_brute_force(std::span<const double> wealth);

// random convex toy instance: fan tree, nonnegative separable quadratics
ToyInstance make_random_toy(std::uint64_t seed, bool simplex_constrained);

}  // namespace nph::oracle
