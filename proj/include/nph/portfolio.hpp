#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nph/np_controller.hpp"

namespace nph {

// Log-return model of the risky instruments (the liquid asset is not part of
// the model; its gross return is pinned at 1).
struct ReturnModel {
  std::vector<double> mean_log;  // per risky asset
  std::vector<double> cov_log;   // row-major, assets x assets
  int assets() const { return static_cast<int>(mean_log.size()); }
};

// Mean/covariance of log gross returns, unbiased covariance. Input rows are
// observations of gross returns, all entries positive, at least two rows.
ReturnModel fit_lognormal(const std::vector<std::vector<double>>& gross_rows);

// n paths of horizon stages of gross returns over (1 + risky) instruments,
// liquid first and fixed at 1; each stage draws exp of a multivariate normal.
// Deterministic per seed.
std::vector<std::vector<double>> sample_price_scenarios(const ReturnModel& model,
                                                        int n, int horizon,
                                                        std::uint64_t seed);

struct LiquidityModel {
  double mu_l = 0.025;
  double sigma_l = 0.01;
};

// Cumulative demand paths starting from accumulated demand L0: running sums
// of per-step Normal(mu, sigma) draws clamped at zero, nondecreasing in t.
std::vector<std::vector<double>> sample_liquidity(const LiquidityModel& model, int n,
                                                  int horizon, std::uint64_t seed,
                                                  double L0 = 0.0);

// W' = W * <x, gross>
double wealth_transition(double wealth, std::span<const double> allocation,
                         std::span<const double> gross);

// Euclidean projection onto {sum x = 1, x >= 0, x_0 >= liquid_floor}.
void project_portfolio_feasible(std::span<double> x, double liquid_floor);

struct WealthMetrics {
  double annualized_return = 0.0;
  double sharpe = 0.0;
  double volatility = 0.0;
  double mdd = 0.0;
  bool zero_variance = false;  // Sharpe reported as 0 in that case
};

WealthMetrics compute_metrics(std::span<const double> wealth_series,
                              int periods_per_year = 252);

// uniform constant rebalancing allocation
std::vector<double> ucrp_step(int assets);

struct PriceTable {
  std::vector<std::string> tickers;
  std::vector<std::vector<double>> gross_returns;  // rows-1 observations
};

// CSV with header date,ticker...; strictly increasing dates, positive prices.
PriceTable load_prices_csv(const std::string& path);

struct PortfolioConfig {
  ReturnModel returns;            // risky assets
  LiquidityModel liquidity;
  double initial_wealth = 1.0;
  bool log_objective = true;      // negative discounted log growth; else linear
  double stress_z = 4.0;          // adds one demand path at mu + z*sigma; 0 disables
  int total_assets() const { return returns.assets() + 1; }
};

// State layout: [wealth, accumulated demand, allocation (J), last gross (J)].
class PortfolioDomain : public Domain {
 public:
  explicit PortfolioDomain(PortfolioConfig config);

  int action_dim() const override { return config_.total_assets(); }
  std::vector<double> initial_state() const override;
  ScenarioTree sample_tree(const std::vector<double>& state, int n_scenarios,
                           int stages, std::uint64_t seed) const override;
  ProblemSpec make_problem(const std::vector<double>& state, const ScenarioTree& tree,
                           double gamma) const override;
  StepOutcome step(const std::vector<double>& state, std::span<const double> action,
                   std::uint64_t seed) const override;

  const PortfolioConfig& config() const { return config_; }

  static double wealth_of(const std::vector<double>& state) { return state[0]; }
  static double accumulated_demand_of(const std::vector<double>& state) { return state[1]; }

 private:
  PortfolioConfig config_;
};

}  // namespace nph
