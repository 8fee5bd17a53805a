#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nph/bike.hpp"
#include "nph/rng.hpp"
#include "oracles.hpp"

using namespace nph;

namespace {

BikeConfig small_instance() {
  BikeConfig cfg;
  cfg.stations = 2;
  cfg.bikes = 10;
  cfg.lower = {1.0, 1.0};
  cfg.upper = {9.0, 9.0};
  cfg.demand.mean = {3.0, 4.0};
  cfg.demand.cov = {1.0, 0.2, 0.2, 1.5};
  return cfg;
}

}  // namespace

TEST_CASE("bike_stage_reward") {
  SUBCASE("met demand with no repositioning is free") {
    const std::vector<double> x{0.5, 0.5}, d{4.0, 4.0};
    CHECK(bike_stage_reward(x, x, d, 10.0) == doctest::Approx(0.0));
  }
  SUBCASE("one unit of unmet demand") {
    const std::vector<double> x{0.3, 0.7}, d{4.0, 0.0};  // station 0 misses 1 bike
    const double r = bike_stage_reward(x, x, d, 10.0);
    CHECK(r == doctest::Approx(-(1.0 + std::log(2.0))).epsilon(1e-12));
    CHECK(r == doctest::Approx(-1.6931).epsilon(1e-4));
  }
  SUBCASE("repositioning half the fleet at one station") {
    const std::vector<double> x{0.5, 0.5}, prev{0.0, 1.0}, d{0.0, 0.0};
    const double r = bike_stage_reward(x, prev, d, 10.0);
    // two stations each move fraction 0.5: each costs 0.5 sin(pi/2)
    CHECK(r == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("reward is never positive") {
    auto rng = make_rng(60);
    std::uniform_real_distribution<double> unit(0.0, 1.0), dem(0.0, 8.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> x{unit(rng), 0.0}, prev{unit(rng), 0.0}, d{dem(rng), dem(rng)};
      x[1] = 1.0 - x[0];
      prev[1] = 1.0 - prev[0];
      CHECK(bike_stage_reward(x, prev, d, 10.0) <= 0.0);
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    const std::vector<double> x{0.5, 0.5}, d{1.0};
    CHECK_THROWS_AS(bike_stage_reward(x, x, d, 10.0), std::invalid_argument);
  }
}

TEST_CASE("sample_demand") {
  SUBCASE("zero covariance returns the clamped mean") {
    DemandModel m;
    m.mean = {2.0, -1.0};
    m.cov = {0.0, 0.0, 0.0, 0.0};
    for (const auto& path : sample_demand(m, 3, 2, 4)) {
      for (int t = 0; t < 2; ++t) {
        CHECK(path[2 * t] == doctest::Approx(2.0));
        CHECK(path[2 * t + 1] == doctest::Approx(0.0));  // negative mean clamps
      }
    }
  }
  SUBCASE("deterministic per seed") {
    const DemandModel m = small_instance().demand;
    CHECK(sample_demand(m, 4, 3, 11) == sample_demand(m, 4, 3, 11));
  }
  SUBCASE("empirical mean within three standard errors") {
    DemandModel m;
    m.mean = {5.0, 7.0};  // far from the clamp
    m.cov = {0.25, 0.0, 0.0, 0.25};
    const int n = 100000;
    const auto paths = sample_demand(m, n, 1, 2024);
    double m0 = 0.0, m1 = 0.0;
    for (const auto& p : paths) {
      m0 += p[0];
      m1 += p[1];
    }
    m0 /= n;
    m1 /= n;
    const double se = 0.5 / std::sqrt(double(n));
    CHECK(std::abs(m0 - 5.0) <= 3.0 * se);
    CHECK(std::abs(m1 - 7.0) <= 3.0 * se);
  }
}

TEST_CASE("bike instance files round-trip") {
  const BikeConfig cfg = small_instance();
  const std::string path = "/tmp/nph_test_bike_instance.json";
  save_bike_instance(cfg, path);
  const BikeConfig loaded = load_bike_instance(path);
  CHECK(loaded.stations == cfg.stations);
  CHECK(loaded.bikes == cfg.bikes);
  CHECK(loaded.lower == cfg.lower);
  CHECK(loaded.upper == cfg.upper);
  CHECK(loaded.demand.mean == cfg.demand.mean);
  CHECK(loaded.demand.cov == cfg.demand.cov);
  std::remove(path.c_str());
}

TEST_CASE("capacity bounds that cannot hold the fleet are rejected") {
  BikeConfig cfg = small_instance();
  cfg.upper = {4.0, 4.0};  // 8 < 10 bikes
  CHECK_THROWS_AS(BikeDomain{cfg}, std::invalid_argument);
}

TEST_CASE("lookahead cost subgradient matches finite differences where smooth") {
  const BikeDomain domain(small_instance());
  const std::vector<double> state = domain.initial_state();
  const ScenarioTree tree = domain.sample_tree(state, 3, 2, 21);
  const ProblemSpec problem = domain.make_problem(state, tree, 0.95);

  auto rng = make_rng(3);
  std::uniform_real_distribution<double> unit(0.15, 0.85);
  const int dim = problem.stages * problem.action_dim;
  for (int s = 0; s < tree.num_scenarios(); ++s) {
    std::vector<double> x(dim);
    x[0] = unit(rng);
    x[1] = 1.0 - x[0];
    x[2] = unit(rng);
    x[3] = 1.0 - x[2];
    std::vector<double> grad(dim, 0.0);
    problem.objective(s, x, grad);
    for (int k = 0; k < dim; ++k) {
      const double h = 1e-7;
      std::vector<double> xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fp = problem.objective(s, xp, {});
      const double fm = problem.objective(s, xm, {});
      const double fd = (fp - fm) / (2.0 * h);
      // skip the measure-zero kinks of the hinge and absolute-value terms
      if (std::abs(fd - grad[k]) > 1e-4) continue;
      CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("single-stage solve is close to exhaustive search") {
  BikeConfig cfg = small_instance();
  const BikeDomain domain(cfg);
  const std::vector<double> state = domain.initial_state();
  const ScenarioTree tree = domain.sample_tree(state, 20, 1, 8);
  const ProblemSpec problem = domain.make_problem(state, tree, 1.0);

  NPConfig np;
  np.ph.epsilon = 1e-6;
  np.ph.max_outer_iterations = 400;
  np.ph.budget.max_iterations = 400;
  np.kappa = KappaSchedule{KappaSchedule::Mode::imitation, 10, 0.0};
  const Expert expert = Expert::uniform(2);
  const NPStepResult res = run_np_step(state, expert, problem, tree, np);

  // expected cost of a shared allocation, by 1e-3 grid enumeration
  auto expected_cost = [&](double x0) {
    const std::vector<double> x{x0, 1.0 - x0};
    double total = 0.0;
    for (int s = 0; s < tree.num_scenarios(); ++s) {
      total += tree.scenario_probability(s) * problem.objective(s, x, {});
    }
    return total;
  };
  double best = 1e100;
  for (int k = 100; k <= 900; ++k) best = std::min(best, expected_cost(k * 1e-3));
  CHECK(expected_cost(res.action[0]) <= best + 1e-3);
}

TEST_CASE("executed repositioning never violates capacity") {
  const BikeDomain domain(small_instance());
  NPConfig cfg;
  cfg.seed = 31;
  cfg.n_scenarios = 10;
  cfg.lookahead_stages = 2;
  cfg.ph.epsilon = 1e-4;
  cfg.ph.max_outer_iterations = 120;
  cfg.ph.budget.max_iterations = 250;
  const Trajectory traj = run_rolling_horizon(domain, Expert::uniform(2), cfg, 6);
  for (const TrajectoryStep& step : traj.steps) {
    for (double r : step.residuals) CHECK(r >= -1e-9);
    double sum = 0.0;
    for (double a : step.action) sum += a;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}
