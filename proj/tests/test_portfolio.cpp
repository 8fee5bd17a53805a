#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "nph/portfolio.hpp"
#include "nph/rng.hpp"
#include "oracles.hpp"

using namespace nph;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/nph_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("fit_lognormal") {
  SUBCASE("constant series") {
    const std::vector<std::vector<double>> rows(5, std::vector<double>{1.01});
    const ReturnModel m = fit_lognormal(rows);
    CHECK(m.mean_log[0] == doctest::Approx(0.00995033).epsilon(1e-6));
    CHECK(m.cov_log[0] == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("duplicated series has unit correlation") {
    std::vector<std::vector<double>> rows;
    for (double g : {1.01, 0.99, 1.02, 0.97, 1.05}) rows.push_back({g, g});
    const ReturnModel m = fit_lognormal(rows);
    CHECK(m.cov_log[1] == doctest::Approx(m.cov_log[0]).epsilon(1e-12));
    CHECK(m.cov_log[2] == doctest::Approx(m.cov_log[3]).epsilon(1e-12));
  }
  SUBCASE("recovers known parameters within three standard errors") {
    const double mu = 0.002, sigma = 0.02;
    auto rng = make_rng(424242);
    std::normal_distribution<double> draw(mu, sigma);
    std::vector<std::vector<double>> rows(1000);
    for (auto& row : rows) row = {std::exp(draw(rng))};
    const ReturnModel m = fit_lognormal(rows);
    CHECK(std::abs(m.mean_log[0] - mu) <= 3.0 * sigma / std::sqrt(1000.0));
  }
  SUBCASE("rejects bad input") {
    CHECK_THROWS_AS(fit_lognormal({{1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_lognormal({{1.0}, {-0.5}}), std::invalid_argument);
  }
}

TEST_CASE("sample_price_scenarios") {
  SUBCASE("degenerate model gives unit gross returns") {
    ReturnModel m;
    m.mean_log = {0.0, 0.0};
    m.cov_log = {0.0, 0.0, 0.0, 0.0};
    const auto paths = sample_price_scenarios(m, 3, 2, 7);
    for (const auto& path : paths) {
      for (double g : path) CHECK(g == 1.0);
    }
  }
  SUBCASE("deterministic per seed") {
    ReturnModel m;
    m.mean_log = {0.001};
    m.cov_log = {4e-4};
    CHECK(sample_price_scenarios(m, 5, 3, 99) == sample_price_scenarios(m, 5, 3, 99));
    CHECK(sample_price_scenarios(m, 5, 3, 99) != sample_price_scenarios(m, 5, 3, 100));
  }
  SUBCASE("sample mean of log returns honors the CLT bound") {
    ReturnModel m;
    m.mean_log = {0.001};
    m.cov_log = {4e-4};
    const auto paths = sample_price_scenarios(m, 10000, 1, 2025);
    double mean = 0.0;
    for (const auto& path : paths) mean += std::log(path[1]);
    mean /= 10000.0;
    CHECK(std::abs(mean - 0.001) <= 3.0 * 0.02 / 100.0);
  }
  SUBCASE("liquid leg is pinned at one") {
    ReturnModel m;
    m.mean_log = {0.01};
    m.cov_log = {1e-3};
    for (const auto& path : sample_price_scenarios(m, 4, 3, 5)) {
      for (int t = 0; t < 3; ++t) CHECK(path[2 * t] == 1.0);
    }
  }
}

TEST_CASE("sample_liquidity") {
  SUBCASE("zero variance accumulates the mean") {
    const auto paths = sample_liquidity(LiquidityModel{0.025, 0.0}, 2, 4, 3, 0.5);
    for (const auto& path : paths) {
      for (int t = 0; t < 4; ++t) {
        CHECK(path[t] == doctest::Approx(0.5 + 0.025 * (t + 1)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("paths are nondecreasing") {
    const auto paths = sample_liquidity(LiquidityModel{0.025, 0.01}, 1000, 5, 77);
    for (const auto& path : paths) {
      double prev = 0.0;
      for (double v : path) {
        CHECK(v >= prev);
        prev = v;
      }
    }
  }
  SUBCASE("per-step mean is close to mu") {
    const int n = 100000;
    const auto paths = sample_liquidity(LiquidityModel{0.025, 0.01}, n, 1, 123);
    double mean = 0.0;
    for (const auto& path : paths) mean += path[0];
    mean /= n;
    CHECK(std::abs(mean - 0.025) <= 3.0 * 0.01 / std::sqrt(double(n)));
  }
}

TEST_CASE("wealth_transition") {
  const std::vector<double> half{0.5, 0.5}, gross{1.0, 1.1};
  CHECK(wealth_transition(1.0, half, gross) == doctest::Approx(1.05).epsilon(1e-15));
  const std::vector<double> ones{1.0, 1.0};
  CHECK(wealth_transition(3.0, half, ones) == doctest::Approx(3.0).epsilon(1e-15));
  const std::vector<double> cash_only{1.0, 0.0}, wild{1.0, 17.0};
  CHECK(wealth_transition(2.0, cash_only, wild) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("project_portfolio_feasible") {
  std::vector<double> a{0.0, 0.5, 0.5};
  project_portfolio_feasible({a.data(), a.size()}, 0.1);
  CHECK(a[0] == doctest::Approx(0.1).epsilon(1e-13));
  CHECK(a[1] == doctest::Approx(0.45).epsilon(1e-13));
  CHECK(a[2] == doctest::Approx(0.45).epsilon(1e-13));

  std::vector<double> b{2.0, 0.0, 0.0};
  project_portfolio_feasible({b.data(), b.size()}, 0.0);
  CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(b[1] == doctest::Approx(0.0));

  std::vector<double> c{0.2, 0.3, 0.5};
  std::vector<double> c2 = c;
  project_portfolio_feasible({c2.data(), c2.size()}, 0.2);
  CHECK(c2 == c);
}

TEST_CASE("compute_metrics") {
  SUBCASE("constant series") {
    const std::vector<double> w(10, 2.5);
    const WealthMetrics m = compute_metrics(w);
    CHECK(m.volatility == doctest::Approx(0.0));
    CHECK(m.mdd == doctest::Approx(0.0));
    CHECK(m.annualized_return == doctest::Approx(0.0));
    CHECK(m.sharpe == 0.0);
    CHECK(m.zero_variance);
  }
  SUBCASE("drawdown matches brute force") {
    const std::vector<double> w{1.0, 1.1, 0.99, 1.05};
    const WealthMetrics m = compute_metrics(w);
    CHECK(m.mdd == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(m.mdd == doctest::Approx(oracle::mdd_brute_force(w)).epsilon(1e-12));
  }
  SUBCASE("one year of growth annualizes to itself") {
    std::vector<double> w(253);
    for (int t = 0; t < 253; ++t) w[t] = 1.0 + 0.1 * t / 252.0;
    const WealthMetrics m = compute_metrics(w, 252);
    CHECK(m.annualized_return == doctest::Approx(0.10).epsilon(1e-12));
  }
  SUBCASE("sanity on random positive series") {
    auto rng = make_rng(5150);
    std::normal_distribution<double> step(0.0005, 0.01);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> w{1.0};
      for (int t = 0; t < 100; ++t) w.push_back(w.back() * std::exp(step(rng)));
      const WealthMetrics m = compute_metrics(w);
      CHECK(m.volatility >= 0.0);
      CHECK(m.mdd >= 0.0);
      CHECK(m.mdd < 1.0);
      CHECK(m.mdd == doctest::Approx(oracle::mdd_brute_force(w)).epsilon(1e-12));
    }
  }
  SUBCASE("short series rejected") {
    CHECK_THROWS_AS(compute_metrics(std::vector<double>{1.0}), std::invalid_argument);
  }
}

TEST_CASE("ucrp_step") {
  const std::vector<double> u4 = ucrp_step(4);
  for (double v : u4) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  const std::vector<double> u2 = ucrp_step(2);
  const std::vector<double> gross{1.1, 0.9};
  CHECK(wealth_transition(1.0, u2, gross) == doctest::Approx(1.0).epsilon(1e-15));

  // constant returns make rebalancing equal to holding the uniform mix
  const std::vector<double> g{1.02, 1.02, 1.02};
  double rebalanced = 1.0, held = 1.0;
  for (int t = 0; t < 5; ++t) rebalanced = wealth_transition(rebalanced, ucrp_step(3), g);
  held = 1.0 * std::pow(1.02, 5);
  CHECK(rebalanced == doctest::Approx(held).epsilon(1e-12));
}

TEST_CASE("load_prices_csv") {
  SUBCASE("gross returns from prices") {
    TempFile f("prices_ok.csv");
    std::ofstream(f.path) << "date,AAA\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n";
    const PriceTable t = load_prices_csv(f.path);
    REQUIRE(t.gross_returns.size() == 2);
    CHECK(t.gross_returns[0][0] == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(t.gross_returns[1][0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(t.tickers == std::vector<std::string>{"AAA"});
  }
  SUBCASE("blank cell is rejected with its row number") {
    TempFile f("prices_blank.csv");
    std::ofstream(f.path) << "date,AAA,BBB\n2020-01-01,100,50\n2020-01-02,,51\n";
    CHECK_THROWS_WITH_AS(load_prices_csv(f.path), doctest::Contains("row 3"),
                         std::runtime_error);
  }
  SUBCASE("unsorted dates are rejected") {
    TempFile f("prices_unsorted.csv");
    std::ofstream(f.path) << "date,AAA\n2020-01-02,100\n2020-01-01,101\n";
    CHECK_THROWS_AS(load_prices_csv(f.path), std::runtime_error);
  }
  SUBCASE("duplicate dates are rejected") {
    TempFile f("prices_dup.csv");
    std::ofstream(f.path) << "date,AAA\n2020-01-01,100\n2020-01-01,101\n";
    CHECK_THROWS_AS(load_prices_csv(f.path), std::runtime_error);
  }
  SUBCASE("nonpositive price is rejected") {
    TempFile f("prices_neg.csv");
    std::ofstream(f.path) << "date,AAA\n2020-01-01,100\n2020-01-02,-5\n";
    CHECK_THROWS_AS(load_prices_csv(f.path), std::runtime_error);
  }
  SUBCASE("round-trip through synthesized prices") {
    const std::vector<double> gross{1.05, 0.97, 1.01, 1.1};
    TempFile f("prices_roundtrip.csv");
    {
      std::ofstream out(f.path);
      out << "date,AAA\n";
      double p = 100.0;
      out << "2020-01-01," << nlohmann::json(p).dump() << "\n";
      for (std::size_t t = 0; t < gross.size(); ++t) {
        p *= gross[t];
        out << "2020-01-0" << (t + 2) << "," << nlohmann::json(p).dump() << "\n";
      }
    }
    const PriceTable t = load_prices_csv(f.path);
    REQUIRE(t.gross_returns.size() == gross.size());
    for (std::size_t k = 0; k < gross.size(); ++k) {
      CHECK(t.gross_returns[k][0] == doctest::Approx(gross[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("lookahead objective gradient matches finite differences") {
  PortfolioConfig cfg;
  cfg.returns.mean_log = {0.02, -0.01};
  cfg.returns.cov_log = {4e-4, 1e-4, 1e-4, 9e-4};
  const PortfolioDomain domain(cfg);
  const std::vector<double> state = domain.initial_state();
  const ScenarioTree tree = domain.sample_tree(state, 3, 2, 31);
  const ProblemSpec problem = domain.make_problem(state, tree, 0.97);

  auto rng = make_rng(8);
  std::uniform_real_distribution<double> unit(0.05, 0.5);
  const int dim = problem.stages * problem.action_dim;
  for (int s = 0; s < tree.num_scenarios(); ++s) {
    std::vector<double> x(dim);
    for (double& v : x) v = unit(rng);
    problem.project_scenario(s, {x.data(), x.size()});
    std::vector<double> grad(dim, 0.0);
    problem.objective(s, x, grad);
    for (int k = 0; k < dim; ++k) {
      const double h = 1e-7;
      std::vector<double> xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = (problem.objective(s, xp, {}) - problem.objective(s, xm, {})) /
                        (2.0 * h);
      CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("scenario sampler extends rather than reshuffles with the count") {
  PortfolioConfig cfg;
  cfg.returns.mean_log = {0.01};
  cfg.returns.cov_log = {4e-4};
  cfg.stress_z = 0.0;
  const PortfolioDomain domain(cfg);
  const std::vector<double> state = domain.initial_state();
  const ScenarioTree small = domain.sample_tree(state, 4, 2, 9);
  const ScenarioTree large = domain.sample_tree(state, 8, 2, 9);
  for (int s = 0; s < 4; ++s) {
    const auto a = small.period_data(s, 1);
    const auto b = large.period_data(s, 1);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}
