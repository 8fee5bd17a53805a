#pragma once

#include <span>

namespace nph {

// Euclidean projections onto the feasible sets used by the domains. All
// operate in place and return the input unchanged when it is already
// feasible within 1e-12, so feasible points are exact fixed points.

// onto {lo <= x_j <= hi}
void project_box(std::span<double> x, double lo, double hi);

// onto {sum x = total, x >= 0}; total must be >= 0
void project_simplex(std::span<double> x, double total = 1.0);

// onto {sum x = 1, x >= 0, x_0 >= floor0}; throws when floor0 > 1
void project_simplex_with_floor(std::span<double> x, double floor0);

// onto {sum x = 1, lo <= x <= hi}; throws when the set is empty
void project_capped_simplex(std::span<double> x, std::span<const double> lo,
                            std::span<const double> hi);

}  // namespace nph
