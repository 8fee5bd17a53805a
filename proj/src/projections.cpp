#include "nph/projections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "nph/errors.hpp"

namespace nph {

namespace {

constexpr double kFeasTol = 1e-12;

double sum(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0);
}

}  // namespace

void project_box(std::span<double> x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("project_box: lo > hi");
  for (double& v : x) v = std::clamp(v, lo, hi);
}

void project_simplex(std::span<double> x, double total) {
  if (total < 0.0) throw std::invalid_argument("project_simplex: negative total");
  if (x.empty()) throw std::invalid_argument("project_simplex: empty vector");
  if (total == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return;
  }
  bool feasible = std::abs(sum(x) - total) <= kFeasTol;
  for (double v : x) feasible = feasible && v >= -kFeasTol;
  if (feasible) return;

  // sort-and-threshold rule
  std::vector<double> u(x.begin(), x.end());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double csum = 0.0;
  double theta = u[0] - total;  // k = 0 candidate always qualifies
  for (std::size_t k = 0; k < u.size(); ++k) {
    csum += u[k];
    const double cand = (csum - total) / static_cast<double>(k + 1);
    if (u[k] - cand > 0.0) theta = cand;
  }
  for (double& v : x) v = std::max(v - theta, 0.0);
}

void project_simplex_with_floor(std::span<double> x, double floor0) {
  if (x.empty()) throw std::invalid_argument("project_simplex_with_floor: empty vector");
  if (floor0 < 0.0) throw std::invalid_argument("project_simplex_with_floor: negative floor");
  if (floor0 > 1.0) {
    throw InfeasibleError("liquidity floor " + std::to_string(floor0) +
                          " exceeds total mass 1");
  }
  bool feasible = std::abs(sum(x) - 1.0) <= kFeasTol && x[0] >= floor0 - kFeasTol;
  for (double v : x) feasible = feasible && v >= -kFeasTol;
  if (feasible) return;

  std::vector<double> plain(x.begin(), x.end());
  project_simplex(std::span<double>(plain.data(), plain.size()), 1.0);
  if (plain[0] >= floor0) {
    std::copy(plain.begin(), plain.end(), x.begin());
    return;
  }
  // floor is active: fix x_0 and spread the remaining mass
  x[0] = floor0;
  project_simplex(x.subspan(1), 1.0 - floor0);
}

void project_capped_simplex(std::span<double> x, std::span<const double> lo,
                            std::span<const double> hi) {
  const std::size_t n = x.size();
  if (n == 0 || lo.size() != n || hi.size() != n) {
    throw std::invalid_argument("project_capped_simplex: size mismatch");
  }
  double lo_sum = 0.0, hi_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (lo[j] > hi[j]) throw std::invalid_argument("project_capped_simplex: lo > hi");
    lo_sum += lo[j];
    hi_sum += hi[j];
  }
  if (lo_sum > 1.0 + kFeasTol || hi_sum < 1.0 - kFeasTol) {
    throw InfeasibleError("capped simplex is empty: sum(lo)=" + std::to_string(lo_sum) +
                          ", sum(hi)=" + std::to_string(hi_sum));
  }

  bool feasible = std::abs(sum(x) - 1.0) <= kFeasTol;
  for (std::size_t j = 0; j < n; ++j) {
    feasible = feasible && x[j] >= lo[j] - kFeasTol && x[j] <= hi[j] + kFeasTol;
  }
  if (feasible) return;

  // S(theta) = sum_j clamp(x_j - theta, lo_j, hi_j) is piecewise linear and
  // nonincreasing; locate the segment where it crosses 1 and solve exactly.
  auto shifted_sum = [&](double theta) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::clamp(x[j] - theta, lo[j], hi[j]);
    return s;
  };
  std::vector<double> bps;
  bps.reserve(2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    bps.push_back(x[j] - hi[j]);
    bps.push_back(x[j] - lo[j]);
  }
  std::sort(bps.begin(), bps.end());

  double theta = bps.back();  // S(back) = sum(lo) <= 1
  if (shifted_sum(bps.front()) <= 1.0) {
    theta = bps.front();
  } else {
    for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
      const double ta = bps[k], tb = bps[k + 1];
      if (ta == tb) continue;
      const double sa = shifted_sum(ta), sb = shifted_sum(tb);
      if (sa >= 1.0 && sb <= 1.0) {
        const double tm = 0.5 * (ta + tb);
        double free_sum = 0.0, fixed = 0.0;
        int free_count = 0;
        for (std::size_t j = 0; j < n; ++j) {
          const double v = x[j] - tm;
          if (v >= hi[j]) {
            fixed += hi[j];
          } else if (v <= lo[j]) {
            fixed += lo[j];
          } else {
            free_sum += x[j];
            ++free_count;
          }
        }
        theta = free_count > 0
                    ? std::clamp((free_sum - (1.0 - fixed)) / free_count, ta, tb)
                    : ta;
        break;
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) x[j] = std::clamp(x[j] - theta, lo[j], hi[j]);
}

}  // namespace nph
