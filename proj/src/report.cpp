#include "nph/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nph {

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp);
    out << content;
    if (!out) throw std::runtime_error("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json trajectory_step_to_json(const TrajectoryStep& step) {
  nlohmann::json j;
  j["step"] = step.step;
  j["state"] = step.state;
  j["action"] = step.action;
  j["realized"] = step.realized;
  j["reward"] = step.reward;
  j["residuals"] = step.residuals;
  j["inner_iterations"] = step.inner_iterations;
  j["converged"] = step.converged;
  if (!step.notes.empty()) j["notes"] = step.notes;
  return j;
}

void write_trajectory_jsonl(const Trajectory& traj, const std::string& path) {
  std::ostringstream out;
  for (const TrajectoryStep& step : traj.steps) {
    out << trajectory_step_to_json(step).dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

Trajectory read_trajectory_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  Trajectory traj;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    TrajectoryStep step;
    step.step = j.at("step").get<int>();
    step.state = j.at("state").get<std::vector<double>>();
    step.action = j.at("action").get<std::vector<double>>();
    step.realized = j.at("realized").get<std::vector<double>>();
    step.reward = j.at("reward").get<double>();
    step.residuals = j.at("residuals").get<std::vector<double>>();
    step.inner_iterations = j.at("inner_iterations").get<int>();
    step.converged = j.at("converged").get<bool>();
    if (j.contains("notes")) step.notes = j.at("notes").get<std::vector<std::string>>();
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

std::vector<double> wealth_series_of(const Trajectory& traj) {
  std::vector<double> series;
  series.reserve(traj.steps.size() + 1);
  for (const TrajectoryStep& step : traj.steps) series.push_back(step.state[0]);
  if (!traj.steps.empty()) {
    const TrajectoryStep& last = traj.steps.back();
    const std::size_t j = last.action.size();
    series.push_back(wealth_transition(last.state[0], last.action,
                                       {last.realized.data(), j}));
  }
  return series;
}

nlohmann::json portfolio_report(const nlohmann::json& config_echo, const Trajectory& traj) {
  const std::vector<double> wealth = wealth_series_of(traj);
  const WealthMetrics m = compute_metrics(wealth);

  int violations = 0;
  double worst_residual = 0.0;
  int nonconverged = 0;
  for (const TrajectoryStep& step : traj.steps) {
    for (double r : step.residuals) {
      if (r < 0.0) ++violations;
      worst_residual = std::min(worst_residual, r);
    }
    if (!step.converged) ++nonconverged;
  }

  nlohmann::json rep;
  rep["config"] = config_echo;
  rep["kind"] = "portfolio";
  rep["steps"] = traj.steps.size();
  rep["metrics"]["returns"] = m.annualized_return;
  rep["metrics"]["sharpe"] = m.sharpe;
  rep["metrics"]["volatility"] = m.volatility;
  rep["metrics"]["mdd"] = m.mdd;
  rep["metrics"]["zero_variance"] = m.zero_variance;
  rep["final_wealth"] = wealth.back();
  rep["violations"] = violations;
  rep["cumulative_violation_cost"] = violations;  // one unit per violated step
  rep["worst_residual"] = worst_residual;
  rep["nonconverged_steps"] = nonconverged;
  return rep;
}

nlohmann::json bike_report(const nlohmann::json& config_echo, const Trajectory& traj) {
  double cumulative_reward = 0.0;
  int violation_cost = 0;
  double worst_residual = 0.0;
  int nonconverged = 0;
  for (const TrajectoryStep& step : traj.steps) {
    cumulative_reward += step.reward;
    for (double r : step.residuals) {
      if (r < 0.0) ++violation_cost;  // one unit per station per step
      worst_residual = std::min(worst_residual, r);
    }
    if (!step.converged) ++nonconverged;
  }
  nlohmann::json rep;
  rep["config"] = config_echo;
  rep["kind"] = "bike";
  rep["steps"] = traj.steps.size();
  rep["cumulative_reward"] = cumulative_reward;
  rep["cumulative_violation_cost"] = violation_cost;
  rep["worst_residual"] = worst_residual;
  rep["nonconverged_steps"] = nonconverged;
  return rep;
}

std::string portfolio_plot_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "step,wealth,liquid_value,cumulative_demand\n";
  for (const TrajectoryStep& step : traj.steps) {
    const double cum_demand = step.state[1] + step.realized.back();
    const double liquid_value = step.state[0] * step.action[0];
    out << step.step << "," << nlohmann::json(step.state[0]).dump() << ","
        << nlohmann::json(liquid_value).dump() << ","
        << nlohmann::json(cum_demand).dump() << "\n";
  }
  return out.str();
}

std::string bike_plot_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "step,reward,cumulative_reward,violation_cost\n";
  double cum = 0.0;
  for (const TrajectoryStep& step : traj.steps) {
    cum += step.reward;
    int cost = 0;
    for (double r : step.residuals) {
      if (r < 0.0) ++cost;
    }
    out << step.step << "," << nlohmann::json(step.reward).dump() << ","
        << nlohmann::json(cum).dump() << "," << cost << "\n";
  }
  return out.str();
}

nlohmann::json comparison_table(const std::vector<nlohmann::json>& reports,
                                const std::vector<std::string>& names) {
  if (reports.size() < 2) {
    throw std::invalid_argument("comparison needs at least two reports");
  }
  if (reports.size() != names.size()) {
    throw std::invalid_argument("comparison: names/reports size mismatch");
  }
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const nlohmann::json& rep = reports[i];
    nlohmann::json row;
    row["name"] = names[i];
    row["kind"] = rep.value("kind", "unknown");
    const bool is_portfolio = rep.contains("metrics");
    row["returns"] = is_portfolio ? rep["metrics"]["returns"] : nlohmann::json();
    row["sharpe"] = is_portfolio ? rep["metrics"]["sharpe"] : nlohmann::json();
    row["volatility"] = is_portfolio ? rep["metrics"]["volatility"] : nlohmann::json();
    row["mdd"] = is_portfolio ? rep["metrics"]["mdd"] : nlohmann::json();
    row["cumulative_reward"] =
        rep.contains("cumulative_reward") ? rep["cumulative_reward"] : nlohmann::json();
    row["cumulative_violation_cost"] = rep.contains("cumulative_violation_cost")
                                           ? rep["cumulative_violation_cost"]
                                           : nlohmann::json();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string comparison_csv(const nlohmann::json& table) {
  const char* cols[] = {"name",   "kind",   "returns",
                        "sharpe", "volatility", "mdd",
                        "cumulative_reward", "cumulative_violation_cost"};
  std::ostringstream out;
  for (std::size_t c = 0; c < std::size(cols); ++c) {
    out << cols[c] << (c + 1 < std::size(cols) ? "," : "\n");
  }
  for (const auto& row : table) {
    for (std::size_t c = 0; c < std::size(cols); ++c) {
      const auto& cell = row.at(cols[c]);
      if (cell.is_string()) {
        out << cell.get<std::string>();
      } else if (!cell.is_null()) {
        out << cell.dump();
      }
      out << (c + 1 < std::size(cols) ? "," : "\n");
    }
  }
  return out.str();
}

}  // namespace nph
