#include "nph/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "chol_util.hpp"
#include "nph/errors.hpp"
#include "nph/projections.hpp"
#include "nph/rng.hpp"

namespace nph {

namespace {

using detail::cholesky_with_jitter;

constexpr std::uint64_t kPriceStream = 0x9812af01;
constexpr std::uint64_t kDemandStream = 0x3c6ef372;

}  // namespace

ReturnModel fit_lognormal(const std::vector<std::vector<double>>& gross_rows) {
  const int rows = static_cast<int>(gross_rows.size());
  if (rows < 2) throw std::invalid_argument("fit_lognormal: need at least 2 observations");
  const int cols = static_cast<int>(gross_rows.front().size());
  if (cols < 1) throw std::invalid_argument("fit_lognormal: no assets");

  Eigen::MatrixXd logs(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(gross_rows[r].size()) != cols) {
      throw std::invalid_argument("fit_lognormal: ragged rows");
    }
    for (int c = 0; c < cols; ++c) {
      const double g = gross_rows[r][c];
      if (!(g > 0.0) || !std::isfinite(g)) {
        throw std::invalid_argument("fit_lognormal: nonpositive gross return at row " +
                                    std::to_string(r));
      }
      logs(r, c) = std::log(g);
    }
  }
  const Eigen::RowVectorXd mean = logs.colwise().mean();
  const Eigen::MatrixXd centered = logs.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / double(rows - 1);

  ReturnModel model;
  model.mean_log.assign(mean.data(), mean.data() + cols);
  model.cov_log.resize(static_cast<std::size_t>(cols) * cols);
  for (int i = 0; i < cols; ++i) {
    for (int j = 0; j < cols; ++j) model.cov_log[static_cast<std::size_t>(i) * cols + j] = cov(i, j);
  }
  return model;
}

std::vector<std::vector<double>> sample_price_scenarios(const ReturnModel& model, int n,
                                                        int horizon, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_price_scenarios: n must be >= 1");
  if (horizon < 1) throw std::invalid_argument("sample_price_scenarios: horizon must be >= 1");
  const int jr = model.assets();
  if (model.cov_log.size() != static_cast<std::size_t>(jr) * jr) {
    throw std::invalid_argument("sample_price_scenarios: covariance size mismatch");
  }
  Eigen::MatrixXd cov(jr, jr);
  for (int i = 0; i < jr; ++i) {
    for (int j = 0; j < jr; ++j) cov(i, j) = model.cov_log[static_cast<std::size_t>(i) * jr + j];
  }
  const Eigen::MatrixXd L = cholesky_with_jitter(cov);

  const int total = jr + 1;
  std::vector<std::vector<double>> paths(n);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  Eigen::VectorXd z(jr);
  for (int s = 0; s < n; ++s) {
    auto rng = make_rng(mix_seed(seed, kPriceStream, s));
    std::vector<double>& path = paths[s];
    path.assign(static_cast<std::size_t>(horizon) * total, 1.0);
    for (int t = 0; t < horizon; ++t) {
      for (int k = 0; k < jr; ++k) z(k) = std_normal(rng);
      const Eigen::VectorXd shock = L * z;
      for (int k = 0; k < jr; ++k) {
        path[static_cast<std::size_t>(t) * total + 1 + k] =
            std::exp(model.mean_log[k] + shock(k));
      }
    }
  }
  return paths;
}

std::vector<std::vector<double>> sample_liquidity(const LiquidityModel& model, int n,
                                                  int horizon, std::uint64_t seed,
                                                  double L0) {
  if (n < 1) throw std::invalid_argument("sample_liquidity: n must be >= 1");
  if (horizon < 1) throw std::invalid_argument("sample_liquidity: horizon must be >= 1");
  if (model.sigma_l < 0.0) throw std::invalid_argument("sample_liquidity: negative sigma");
  std::vector<std::vector<double>> paths(n);
  std::normal_distribution<double> draw(model.mu_l, model.sigma_l);
  for (int s = 0; s < n; ++s) {
    auto rng = make_rng(mix_seed(seed, kDemandStream, s));
    std::vector<double>& path = paths[s];
    path.resize(horizon);
    double acc = L0;
    for (int t = 0; t < horizon; ++t) {
      acc += std::max(0.0, draw(rng));
      path[t] = acc;
    }
  }
  return paths;
}

double wealth_transition(double wealth, std::span<const double> allocation,
                         std::span<const double> gross) {
  if (allocation.size() != gross.size()) {
    throw std::invalid_argument("wealth_transition: size mismatch");
  }
  double r = 0.0;
  for (std::size_t j = 0; j < allocation.size(); ++j) r += allocation[j] * gross[j];
  return wealth * r;
}

void project_portfolio_feasible(std::span<double> x, double liquid_floor) {
  project_simplex_with_floor(x, liquid_floor);
}

WealthMetrics compute_metrics(std::span<const double> wealth_series, int periods_per_year) {
  const int len = static_cast<int>(wealth_series.size());
  if (len < 2) throw std::invalid_argument("compute_metrics: series shorter than 2");
  for (double w : wealth_series) {
    if (!(w > 0.0)) throw std::invalid_argument("compute_metrics: nonpositive wealth");
  }
  const int periods = len - 1;
  std::vector<double> rets(periods);
  for (int t = 1; t < len; ++t) rets[t - 1] = wealth_series[t] / wealth_series[t - 1] - 1.0;

  WealthMetrics m;
  m.annualized_return =
      std::pow(wealth_series[len - 1] / wealth_series[0],
               static_cast<double>(periods_per_year) / periods) - 1.0;

  const double mean = std::accumulate(rets.begin(), rets.end(), 0.0) / periods;
  double var = 0.0;
  for (double r : rets) var += (r - mean) * (r - mean);
  var = periods > 1 ? var / (periods - 1) : 0.0;
  const double sd = std::sqrt(var);
  const double ann = std::sqrt(static_cast<double>(periods_per_year));
  m.volatility = sd * ann;
  if (sd > 0.0) {
    m.sharpe = mean / sd * ann;
  } else {
    m.sharpe = 0.0;
    m.zero_variance = true;
  }

  double peak = wealth_series[0];
  for (double w : wealth_series) {
    peak = std::max(peak, w);
    m.mdd = std::max(m.mdd, (peak - w) / peak);
  }
  return m;
}

std::vector<double> ucrp_step(int assets) {
  if (assets < 1) throw std::invalid_argument("ucrp_step: assets must be >= 1");
  return std::vector<double>(assets, 1.0 / assets);
}

PriceTable load_prices_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open price file: " + path);

  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
  };

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const std::vector<std::string> header = split(line);
  if (header.size() < 2 || header[0] != "date") {
    throw std::runtime_error(path + ": header must be 'date,ticker...'");
  }
  PriceTable table;
  table.tickers.assign(header.begin() + 1, header.end());
  const std::size_t cols = table.tickers.size();

  std::vector<std::vector<double>> prices;
  std::string prev_date;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != cols + 1) {
      throw std::runtime_error(path + ": row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(cols + 1));
    }
    if (!prev_date.empty() && cells[0] <= prev_date) {
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               " date is not strictly increasing");
    }
    prev_date = cells[0];
    std::vector<double> p(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      if (cells[c + 1].empty()) {
        throw std::runtime_error(path + ": row " + std::to_string(row) + " has a blank cell");
      }
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cells[c + 1], &used);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ": row " + std::to_string(row) + " has a non-numeric cell");
      }
      if (used != cells[c + 1].size()) {
        throw std::runtime_error(path + ": row " + std::to_string(row) + " has a non-numeric cell");
      }
      if (!(v > 0.0)) {
        throw std::runtime_error(path + ": row " + std::to_string(row) + " has a nonpositive price");
      }
      p[c] = v;
    }
    prices.push_back(std::move(p));
  }
  if (prices.size() < 2) throw std::runtime_error(path + ": need at least two price rows");

  table.gross_returns.resize(prices.size() - 1);
  for (std::size_t r = 1; r < prices.size(); ++r) {
    std::vector<double>& g = table.gross_returns[r - 1];
    g.resize(cols);
    for (std::size_t c = 0; c < cols; ++c) g[c] = prices[r][c] / prices[r - 1][c];
  }
  return table;
}

PortfolioDomain::PortfolioDomain(PortfolioConfig config) : config_(std::move(config)) {
  if (config_.returns.assets() < 1) {
    throw std::invalid_argument("portfolio domain: need at least one risky asset");
  }
  if (!(config_.initial_wealth > 0.0)) {
    throw std::invalid_argument("portfolio domain: initial wealth must be positive");
  }
}

std::vector<double> PortfolioDomain::initial_state() const {
  const int j = config_.total_assets();
  std::vector<double> state(2 + 2 * j, 0.0);
  state[0] = config_.initial_wealth;
  state[1] = 0.0;
  state[2] = 1.0;  // everything starts in the liquid asset
  for (int k = 0; k < j; ++k) state[2 + j + k] = 1.0;
  return state;
}

ScenarioTree PortfolioDomain::sample_tree(const std::vector<double>& state, int n_scenarios,
                                          int stages, std::uint64_t seed) const {
  const int j = config_.total_assets();
  const double acc = accumulated_demand_of(state);
  auto gross = sample_price_scenarios(config_.returns, n_scenarios, stages,
                                      mix_seed(seed, 1));
  auto demand = sample_liquidity(config_.liquidity, n_scenarios, stages,
                                 mix_seed(seed, 2), acc);
  if (config_.stress_z > 0.0 && n_scenarios >= 2) {
    // one stressed demand path so the executed floor covers tail draws
    double accs = acc;
    for (int t = 0; t < stages; ++t) {
      accs += std::max(0.0, config_.liquidity.mu_l +
                                config_.stress_z * config_.liquidity.sigma_l);
      demand.back()[t] = accs;
    }
  }

  const int d = j + 1;
  std::vector<std::vector<double>> data(n_scenarios);
  for (int s = 0; s < n_scenarios; ++s) {
    std::vector<double>& row = data[s];
    row.resize(static_cast<std::size_t>(stages) * d);
    for (int t = 0; t < stages; ++t) {
      for (int k = 0; k < j; ++k) {
        row[static_cast<std::size_t>(t) * d + k] = gross[s][static_cast<std::size_t>(t) * j + k];
      }
      row[static_cast<std::size_t>(t) * d + j] = demand[s][t];
    }
  }
  return ScenarioTree::two_layer(n_scenarios, stages, j, d,
                                 std::vector<double>(n_scenarios, 1.0 / n_scenarios),
                                 std::move(data));
}

ProblemSpec PortfolioDomain::make_problem(const std::vector<double>& state,
                                          const ScenarioTree& tree, double gamma) const {
  const int j = config_.total_assets();
  const int T = tree.num_stages();
  const double wealth = wealth_of(state);
  const bool log_mode = config_.log_objective;

  ProblemSpec spec;
  spec.stages = T;
  spec.action_dim = j;
  spec.smooth = true;

  // stage-t liquid floor of scenario s: cumulative demand over current wealth
  auto floor_at = [&tree, wealth, j](int s, int t) {
    const double demand = tree.period_data(s, t)[j];
    return demand / wealth;
  };

  spec.objective = [&tree, j, T, gamma, log_mode](int s, std::span<const double> x,
                                                  std::span<double> grad) {
    double total = 0.0;
    double disc = 1.0;
    for (int t = 0; t < T; ++t) {
      const auto data = tree.period_data(s, t + 1);
      double r = 0.0;
      for (int k = 0; k < j; ++k) r += x[static_cast<std::size_t>(t) * j + k] * data[k];
      if (log_mode) {
        total -= disc * std::log(r);
        if (!grad.empty()) {
          for (int k = 0; k < j; ++k) {
            grad[static_cast<std::size_t>(t) * j + k] = -disc * data[k] / r;
          }
        }
      } else {
        total -= disc * r;
        if (!grad.empty()) {
          for (int k = 0; k < j; ++k) {
            grad[static_cast<std::size_t>(t) * j + k] = -disc * data[k];
          }
        }
      }
      disc *= gamma;
    }
    return total;
  };

  spec.project_scenario = [floor_at, j, T](int s, std::span<double> x) {
    for (int t = 0; t < T; ++t) {
      project_simplex_with_floor(x.subspan(static_cast<std::size_t>(t) * j, j),
                                 floor_at(s, t + 1));
    }
  };

  spec.project_first_stage = [floor_at, &tree](std::span<double> x1) {
    double worst = 0.0;
    for (int s = 0; s < tree.num_scenarios(); ++s) worst = std::max(worst, floor_at(s, 1));
    project_simplex_with_floor(x1, worst);
  };

  spec.transition = [j](const std::vector<double>& st, std::span<const double> action,
                        std::span<const double> period_data) {
    std::vector<double> next = st;
    next[0] = wealth_transition(st[0], action, period_data.first(j));
    next[1] = period_data[j];  // cumulative demand after the period
    for (int k = 0; k < j; ++k) {
      next[2 + k] = action[k];
      next[2 + j + k] = period_data[k];
    }
    return next;
  };

  spec.features = [j](const std::vector<double>& st) {
    std::vector<double> phi(2 * j + 1);
    for (int k = 0; k < 2 * j; ++k) phi[k] = st[2 + k];
    phi[2 * j] = std::min(st[1] / st[0], 1.0);
    return phi;
  };

  spec.reserve_fraction = [](const std::vector<double>& st, double mu_l, double sigma_l) {
    return (st[1] + mu_l + 3.0 * sigma_l) / st[0];
  };

  return spec;
}

StepOutcome PortfolioDomain::step(const std::vector<double>& state,
                                  std::span<const double> action,
                                  std::uint64_t seed) const {
  const int j = config_.total_assets();
  if (static_cast<int>(action.size()) != j) {
    throw std::invalid_argument("portfolio step: action size mismatch");
  }
  const double wealth = wealth_of(state);
  const double acc = accumulated_demand_of(state);

  const auto gross = sample_price_scenarios(config_.returns, 1, 1, mix_seed(seed, 1));
  std::normal_distribution<double> draw(config_.liquidity.mu_l, config_.liquidity.sigma_l);
  auto rng = make_rng(mix_seed(seed, 2));
  const double demand = std::max(0.0, draw(rng));

  const double next_wealth = wealth_transition(wealth, action, gross[0]);
  const double cum_demand = acc + demand;

  StepOutcome out;
  out.next_state = state;
  out.next_state[0] = next_wealth;
  out.next_state[1] = cum_demand;
  for (int k = 0; k < j; ++k) {
    out.next_state[2 + k] = action[k];
    out.next_state[2 + j + k] = gross[0][k];
  }
  out.realized.assign(gross[0].begin(), gross[0].end());
  out.realized.push_back(demand);
  out.reward = std::log(next_wealth / wealth);
  out.residuals = {wealth * action[0] - cum_demand};
  return out;
}

}  // namespace nph
