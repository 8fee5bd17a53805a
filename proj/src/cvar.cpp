#include "nph/cvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace nph {

double cvar(std::span<const double> values, std::span<const double> probs,
            double alpha) {
  if (values.empty()) throw std::invalid_argument("cvar: empty sample list");
  if (values.size() != probs.size()) {
    throw std::invalid_argument("cvar: values/probs size mismatch");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("cvar: alpha must lie in [0, 1)");
  }
  double psum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("cvar: probabilities must be nonnegative");
    }
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-10) {
    throw std::invalid_argument("cvar: probabilities sum to " + std::to_string(psum));
  }

  const double c = 1.0 / (1.0 - alpha);
  // candidates sorted ascending; the smallest minimizer is kept on ties
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values[a] < values[b]; });

  double best = std::numeric_limits<double>::infinity();
  for (int idx : order) {
    const double y = values[idx];
    double tail = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k] > y) tail += probs[k] * (values[k] - y);
    }
    const double phi = y + c * tail;
    if (phi < best) best = phi;
  }
  return best;
}

}  // namespace nph
