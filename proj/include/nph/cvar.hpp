#pragma once

#include <span>

namespace nph {

// Conditional value-at-risk of a discrete distribution at level alpha in
// [0, 1): min over y of y + (1/(1-alpha)) * sum_k p_k max(0, z_k - y).
// The minimum of this piecewise-linear function is attained at one of the
// sample values, so it is computed exactly by scanning them; alpha = 0
// recovers the probability-weighted mean.
double cvar(std::span<const double> values, std::span<const double> probs,
            double alpha);

}  // namespace nph
