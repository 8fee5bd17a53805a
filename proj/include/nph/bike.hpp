#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nph/np_controller.hpp"

namespace nph {

struct DemandModel {
  std::vector<double> mean;  // per station
  std::vector<double> cov;   // row-major, stations x stations
  int stations() const { return static_cast<int>(mean.size()); }
};

// n paths of horizon stages of per-station demand, negative components
// clamped at zero; deterministic per seed.
std::vector<std::vector<double>> sample_demand(const DemandModel& model, int n,
                                               int horizon, std::uint64_t seed);

// Station reward of one stage: unmet demand L_j = max(0, d_j - N x_j) costs
// L (1 + log(1 + L)); repositioned fraction R_j = |x_j - prev_j| costs
// R sin(pi R). Zero exactly when demand is met and nothing moves.
double bike_stage_reward(std::span<const double> x, std::span<const double> prev,
                         std::span<const double> demand, double total_bikes);

struct BikeConfig {
  int stations = 4;
  int bikes = 40;
  std::vector<double> lower;  // per-station min allocated bikes
  std::vector<double> upper;  // per-station max allocated bikes
  DemandModel demand;
};

BikeConfig load_bike_instance(const std::string& path);
void save_bike_instance(const BikeConfig& config, const std::string& path);

// State layout: [allocation (J), last demand (J)].
class BikeDomain : public Domain {
 public:
  explicit BikeDomain(BikeConfig config);

  int action_dim() const override { return config_.stations; }
  std::vector<double> initial_state() const override;
  ScenarioTree sample_tree(const std::vector<double>& state, int n_scenarios,
                           int stages, std::uint64_t seed) const override;
  ProblemSpec make_problem(const std::vector<double>& state, const ScenarioTree& tree,
                           double gamma) const override;
  StepOutcome step(const std::vector<double>& state, std::span<const double> action,
                   std::uint64_t seed) const override;

  const BikeConfig& config() const { return config_; }
  const std::vector<double>& lower_fraction() const { return lo_frac_; }
  const std::vector<double>& upper_fraction() const { return hi_frac_; }

 private:
  std::vector<double> next_allocation(std::span<const double> action,
                                      std::span<const double> demand) const;

  BikeConfig config_;
  std::vector<double> lo_frac_;
  std::vector<double> hi_frac_;
  std::vector<double> center_;  // feasible interior point for solver restarts
};

}  // namespace nph
