#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nph/bike.hpp"
#include "nph/np_controller.hpp"
#include "nph/portfolio.hpp"

namespace nph {

// write-to-temp-then-rename so readers never observe partial files
void write_file_atomic(const std::string& path, const std::string& content);

nlohmann::json trajectory_step_to_json(const TrajectoryStep& step);
void write_trajectory_jsonl(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_jsonl(const std::string& path);

// wealth series implied by a portfolio trajectory (initial wealth first)
std::vector<double> wealth_series_of(const Trajectory& traj);

// Report documents are pure functions of the config echo and the trajectory;
// recomputing any metric from the trajectory log reproduces the report.
nlohmann::json portfolio_report(const nlohmann::json& config_echo, const Trajectory& traj);
nlohmann::json bike_report(const nlohmann::json& config_echo, const Trajectory& traj);

// plot data: step, wealth, liquid allocation, cumulative demand
std::string portfolio_plot_csv(const Trajectory& traj);
// plot data: step, reward, cumulative reward, violation cost
std::string bike_plot_csv(const Trajectory& traj);

// one row per report, shared column schema
nlohmann::json comparison_table(const std::vector<nlohmann::json>& reports,
                                const std::vector<std::string>& names);
std::string comparison_csv(const nlohmann::json& table);

}  // namespace nph
