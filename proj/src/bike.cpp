#include "nph/bike.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <json.hpp>

#include "chol_util.hpp"
#include "nph/projections.hpp"
#include "nph/rng.hpp"

namespace nph {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

std::vector<std::vector<double>> sample_demand(const DemandModel& model, int n,
                                               int horizon, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_demand: n must be >= 1");
  if (horizon < 1) throw std::invalid_argument("sample_demand: horizon must be >= 1");
  const int j = model.stations();
  if (model.cov.size() != static_cast<std::size_t>(j) * j) {
    throw std::invalid_argument("sample_demand: covariance size mismatch");
  }
  Eigen::MatrixXd cov(j, j);
  for (int a = 0; a < j; ++a) {
    for (int b = 0; b < j; ++b) cov(a, b) = model.cov[static_cast<std::size_t>(a) * j + b];
  }
  const Eigen::MatrixXd L = detail::cholesky_with_jitter(cov);

  std::vector<std::vector<double>> paths(n);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  Eigen::VectorXd z(j);
  for (int s = 0; s < n; ++s) {
    auto rng = make_rng(mix_seed(seed, 0x6b8e23, s));
    std::vector<double>& path = paths[s];
    path.resize(static_cast<std::size_t>(horizon) * j);
    for (int t = 0; t < horizon; ++t) {
      for (int k = 0; k < j; ++k) z(k) = std_normal(rng);
      const Eigen::VectorXd d = L * z;
      for (int k = 0; k < j; ++k) {
        path[static_cast<std::size_t>(t) * j + k] = std::max(0.0, model.mean[k] + d(k));
      }
    }
  }
  return paths;
}

double bike_stage_reward(std::span<const double> x, std::span<const double> prev,
                         std::span<const double> demand, double total_bikes) {
  const std::size_t j = x.size();
  if (prev.size() != j || demand.size() != j) {
    throw std::invalid_argument("bike_stage_reward: dimension mismatch");
  }
  double reward = 0.0;
  for (std::size_t k = 0; k < j; ++k) {
    const double unmet = std::max(0.0, demand[k] - total_bikes * x[k]);
    const double moved = std::abs(x[k] - prev[k]);
    reward -= unmet * (1.0 + std::log1p(unmet));
    reward -= moved * std::sin(kPi * moved);
  }
  return reward;
}

BikeConfig load_bike_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bike instance: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("bike instance " + path + ": " + e.what());
  }
  for (const char* key : {"stations", "bikes", "lower", "upper", "demand_mean", "demand_cov"}) {
    if (!j.contains(key)) {
      throw std::runtime_error("bike instance " + path + ": missing field '" + key + "'");
    }
  }
  BikeConfig cfg;
  cfg.stations = j.at("stations").get<int>();
  cfg.bikes = j.at("bikes").get<int>();
  cfg.lower = j.at("lower").get<std::vector<double>>();
  cfg.upper = j.at("upper").get<std::vector<double>>();
  cfg.demand.mean = j.at("demand_mean").get<std::vector<double>>();
  const auto& cov = j.at("demand_cov");
  if (cov.is_array() && !cov.empty() && cov.front().is_array()) {
    for (const auto& row : cov) {
      const auto r = row.get<std::vector<double>>();
      cfg.demand.cov.insert(cfg.demand.cov.end(), r.begin(), r.end());
    }
  } else {
    cfg.demand.cov = cov.get<std::vector<double>>();
  }
  return cfg;
}

void save_bike_instance(const BikeConfig& config, const std::string& path) {
  nlohmann::json j;
  j["stations"] = config.stations;
  j["bikes"] = config.bikes;
  j["lower"] = config.lower;
  j["upper"] = config.upper;
  j["demand_mean"] = config.demand.mean;
  j["demand_cov"] = config.demand.cov;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bike instance: " + path);
  out << j.dump(2) << "\n";
}

BikeDomain::BikeDomain(BikeConfig config) : config_(std::move(config)) {
  const int j = config_.stations;
  if (j < 1) throw std::invalid_argument("bike domain: stations must be >= 1");
  if (config_.bikes < 1) throw std::invalid_argument("bike domain: bikes must be >= 1");
  if (static_cast<int>(config_.lower.size()) != j ||
      static_cast<int>(config_.upper.size()) != j ||
      config_.demand.stations() != j ||
      config_.demand.cov.size() != static_cast<std::size_t>(j) * j) {
    throw std::invalid_argument("bike domain: field sizes disagree with stations");
  }
  double lo_sum = 0.0, hi_sum = 0.0;
  lo_frac_.resize(j);
  hi_frac_.resize(j);
  const double N = config_.bikes;
  for (int k = 0; k < j; ++k) {
    if (config_.lower[k] > config_.upper[k]) {
      throw std::invalid_argument("bike domain: lower bound above upper at station " +
                                  std::to_string(k));
    }
    lo_frac_[k] = config_.lower[k] / N;
    hi_frac_[k] = config_.upper[k] / N;
    lo_sum += config_.lower[k];
    hi_sum += config_.upper[k];
  }
  if (lo_sum > N || hi_sum < N) {
    throw std::invalid_argument("bike domain: capacity bounds cannot hold the fleet");
  }
  center_ = std::vector<double>(j, 1.0 / j);
  project_capped_simplex({center_.data(), center_.size()}, lo_frac_, hi_frac_);
}

std::vector<double> BikeDomain::initial_state() const {
  const int j = config_.stations;
  std::vector<double> state(2 * j, 0.0);
  std::vector<double> alloc(j, 1.0 / j);
  project_capped_simplex({alloc.data(), alloc.size()}, lo_frac_, hi_frac_);
  for (int k = 0; k < j; ++k) state[k] = alloc[k];
  return state;
}

ScenarioTree BikeDomain::sample_tree(const std::vector<double>& state, int n_scenarios,
                                     int stages, std::uint64_t seed) const {
  (void)state;
  const int j = config_.stations;
  auto demand = sample_demand(config_.demand, n_scenarios, stages, seed);
  return ScenarioTree::two_layer(n_scenarios, stages, j, j,
                                 std::vector<double>(n_scenarios, 1.0 / n_scenarios),
                                 std::move(demand));
}

ProblemSpec BikeDomain::make_problem(const std::vector<double>& state,
                                     const ScenarioTree& tree, double gamma) const {
  const int j = config_.stations;
  const int T = tree.num_stages();
  const double N = config_.bikes;
  std::vector<double> start_alloc(state.begin(), state.begin() + j);

  ProblemSpec spec;
  spec.stages = T;
  spec.action_dim = j;
  spec.smooth = true;  // piecewise C^1: hinge kinks only, sine term is C^1
  spec.nonconvex = true;

  spec.objective = [&tree, j, T, N, gamma, start_alloc](int s, std::span<const double> x,
                                                        std::span<double> grad) {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    double cost = 0.0;
    double disc = 1.0;
    for (int t = 0; t < T; ++t) {
      const auto d = tree.period_data(s, t + 1);
      const double* prev = t == 0 ? start_alloc.data() : &x[static_cast<std::size_t>(t - 1) * j];
      for (int k = 0; k < j; ++k) {
        const double xk = x[static_cast<std::size_t>(t) * j + k];
        const double unmet = d[k] - N * xk;
        if (unmet > 0.0) {
          cost += disc * unmet * (1.0 + std::log1p(unmet));
          if (!grad.empty()) {
            const double dldu = 1.0 + std::log1p(unmet) + unmet / (1.0 + unmet);
            grad[static_cast<std::size_t>(t) * j + k] += disc * dldu * (-N);
          }
        }
        const double diff = xk - prev[k];
        const double moved = std::abs(diff);
        cost += disc * moved * std::sin(kPi * moved);
        if (!grad.empty() && moved > 0.0) {
          const double drdm = std::sin(kPi * moved) + kPi * moved * std::cos(kPi * moved);
          const double sign = diff > 0.0 ? 1.0 : -1.0;
          grad[static_cast<std::size_t>(t) * j + k] += disc * drdm * sign;
          if (t > 0) {
            grad[static_cast<std::size_t>(t - 1) * j + k] -= disc * drdm * sign;
          }
        }
      }
      disc *= gamma;
    }
    return cost;
  };

  spec.project_scenario = [this, j, T](int, std::span<double> x) {
    for (int t = 0; t < T; ++t) {
      project_capped_simplex(x.subspan(static_cast<std::size_t>(t) * j, j), lo_frac_,
                             hi_frac_);
    }
  };

  spec.project_first_stage = [this](std::span<double> x1) {
    project_capped_simplex(x1, lo_frac_, hi_frac_);
  };

  spec.transition = [this](const std::vector<double>&, std::span<const double> action,
                           std::span<const double> period_data) {
    const int jj = config_.stations;
    std::vector<double> next(2 * jj);
    const std::vector<double> alloc = next_allocation(action, period_data);
    for (int k = 0; k < jj; ++k) {
      next[k] = alloc[k];
      next[jj + k] = period_data[k];
    }
    return next;
  };

  spec.features = [this](const std::vector<double>& st) {
    const int jj = config_.stations;
    std::vector<double> phi(2 * jj);
    for (int k = 0; k < jj; ++k) {
      phi[k] = st[k];
      phi[jj + k] = st[jj + k] / config_.bikes;
    }
    return phi;
  };

  spec.restart_hints = [this, T, j](int) {
    std::vector<double> block(static_cast<std::size_t>(T) * j);
    for (int t = 0; t < T; ++t) {
      std::copy(center_.begin(), center_.end(), block.begin() + static_cast<std::size_t>(t) * j);
    }
    return std::vector<std::vector<double>>{std::move(block)};
  };

  return spec;
}

std::vector<double> BikeDomain::next_allocation(std::span<const double> action,
                                                std::span<const double> demand) const {
  const int j = config_.stations;
  const double N = config_.bikes;
  std::vector<double> remaining(j);
  double total = 0.0;
  for (int k = 0; k < j; ++k) {
    const double placed = N * action[k];
    remaining[k] = placed - std::min(placed, demand[k]);
    total += remaining[k];
  }
  if (total <= 0.0) {
    return std::vector<double>(j, 1.0 / j);  // fleet fully rented out
  }
  for (int k = 0; k < j; ++k) remaining[k] /= total;
  return remaining;
}

StepOutcome BikeDomain::step(const std::vector<double>& state,
                             std::span<const double> action, std::uint64_t seed) const {
  const int j = config_.stations;
  if (static_cast<int>(action.size()) != j) {
    throw std::invalid_argument("bike step: action size mismatch");
  }
  const auto demand = sample_demand(config_.demand, 1, 1, seed);
  const std::span<const double> d{demand[0].data(), static_cast<std::size_t>(j)};

  StepOutcome out;
  out.reward = bike_stage_reward(action, std::span<const double>(state.data(), j), d,
                                 config_.bikes);
  out.realized.assign(d.begin(), d.end());
  out.residuals.resize(j);
  const double N = config_.bikes;
  for (int k = 0; k < j; ++k) {
    out.residuals[k] = std::min(N * action[k] - config_.lower[k],
                                config_.upper[k] - N * action[k]);
  }
  const std::vector<double> alloc = next_allocation(action, d);
  out.next_state.resize(2 * j);
  for (int k = 0; k < j; ++k) {
    out.next_state[k] = alloc[k];
    out.next_state[j + k] = d[k];
  }
  return out;
}

}  // namespace nph
