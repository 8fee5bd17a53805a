#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nph/errors.hpp"
#include "nph/report.hpp"
#include "nph/rng.hpp"
#include "nph/run_config.hpp"
#include "nph/tree_json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitInfeasible = 4;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool trace = false;
};

nph::RunConfig load_config(const CommonArgs& args) {
  nph::RunConfig cfg = nph::load_run_config(args.config_path);
  if (args.seed) {
    cfg.np.seed = *args.seed;
    cfg.echo["seed"] = *args.seed;
  }
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  if (args.trace) cfg.trace = true;
  std::filesystem::create_directories(cfg.out_dir);
  return cfg;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// one-shot solve on a fixed tree sampled at the initial state
int cmd_solve(const CommonArgs& args) {
  const nph::RunConfig cfg = load_config(args);
  if (cfg.mode == nph::RunMode::expert_only) {
    throw nph::ConfigError("mode: expert_only has nothing to solve");
  }

  std::ostringstream trace_lines;
  nph::PHTraceFn trace;
  if (cfg.trace) {
    trace = [&trace_lines](const nph::PHIterationRecord& rec) {
      nlohmann::json j;
      j["iteration"] = rec.iteration;
      j["delta"] = rec.delta;
      j["objective"] = rec.objective;
      j["penalty"] = rec.penalty;
      j["kappa"] = rec.kappa;
      trace_lines << j.dump() << "\n";
    };
  }

  nph::PHSolution sol;
  std::optional<nph::ScenarioTree> tree;
  std::vector<double> first_action;
  if (cfg.domain == "toy") {
    tree = cfg.toy->build_tree();
    const nph::ProblemSpec problem = cfg.toy->build_problem();
    nph::PolicyMapping start = nph::PolicyMapping::zeros_like(*tree);
    for (int s = 0; s < tree->num_scenarios(); ++s) {
      problem.project_scenario(s, start.scenario_block(s));
    }
    start = nph::project_nonanticipative(*tree, start);
    if (cfg.mode == nph::RunMode::np) {
      const nph::Expert expert = nph::build_expert(cfg.expert, tree->action_dim());
      std::vector<double> state(tree->action_dim(), 0.0);
      nph::NPStepResult res =
          nph::run_np_step(state, expert, problem, *tree, cfg.np, trace);
      sol = std::move(res.solution);
      first_action = std::move(res.action);
    } else {
      sol = nph::run_ph(problem, *tree, start, cfg.np.ph, trace);
      auto a = sol.x_star.action(0, 0);
      first_action.assign(a.begin(), a.end());
    }
  } else {
    const auto domain = nph::build_domain(cfg);
    const std::vector<double> state = domain->initial_state();
    tree = domain->sample_tree(state, cfg.np.n_scenarios, cfg.np.lookahead_stages,
                               nph::mix_seed(cfg.np.seed, 0x7265cafe, 1));
    const nph::ProblemSpec problem = domain->make_problem(state, *tree, cfg.np.discount_gamma);
    const nph::Expert expert = nph::build_expert(cfg.expert, domain->action_dim());
    nph::NPConfig np = cfg.np;
    if (cfg.mode == nph::RunMode::pure_sp) {
      np.kappa = nph::KappaSchedule{nph::KappaSchedule::Mode::constant, 1, 0.0};
    }
    nph::NPStepResult res = nph::run_np_step(state, expert, problem, *tree, np, trace);
    sol = std::move(res.solution);
    first_action = std::move(res.action);
  }

  nlohmann::json out;
  out["config"] = cfg.echo;
  out["converged"] = sol.converged;
  out["iterations"] = sol.iterations;
  out["objective_value"] = sol.objective_value;
  out["delta_history"] = sol.delta_history;
  out["first_stage_action"] = first_action;
  nlohmann::json xs = nlohmann::json::array();
  for (int s = 0; s < tree->num_scenarios(); ++s) {
    nlohmann::json stages = nlohmann::json::array();
    for (int t = 0; t < tree->num_stages(); ++t) {
      auto a = sol.x_star.action(s, t);
      stages.push_back(std::vector<double>(a.begin(), a.end()));
    }
    xs.push_back(std::move(stages));
  }
  out["x_star"] = std::move(xs);
  if (!sol.y_star.empty()) out["y_star"] = sol.y_star;

  nph::write_file_atomic(join(cfg.out_dir, "solution.json"), out.dump(2) + "\n");
  if (cfg.trace) {
    nph::write_file_atomic(join(cfg.out_dir, "trace.jsonl"), trace_lines.str());
  }
  if (!sol.converged) {
    std::cerr << "solve: not converged after " << sol.iterations << " iterations\n";
    return kExitNotConverged;
  }
  std::cout << "solve: objective " << sol.objective_value << " in " << sol.iterations
            << " iterations\n";
  return kExitOk;
}

int run_and_report(const CommonArgs& args, bool bike) {
  const nph::RunConfig cfg = load_config(args);
  if (bike && cfg.domain != "bike") {
    throw nph::ConfigError("bike-sim requires domain 'bike'");
  }
  if (!bike && cfg.domain != "portfolio") {
    throw nph::ConfigError("backtest requires domain 'portfolio'");
  }
  const auto domain = nph::build_domain(cfg);
  const nph::Expert expert = nph::build_expert(cfg.expert, domain->action_dim());

  const auto t0 = std::chrono::steady_clock::now();
  const nph::Trajectory traj =
      nph::run_rolling_horizon(*domain, expert, cfg.np, cfg.steps, cfg.mode);
  const auto t1 = std::chrono::steady_clock::now();

  nph::write_trajectory_jsonl(traj, join(cfg.out_dir, "trajectory.jsonl"));
  const nlohmann::json rep =
      bike ? nph::bike_report(cfg.echo, traj) : nph::portfolio_report(cfg.echo, traj);
  nph::write_file_atomic(join(cfg.out_dir, "report.json"), rep.dump(2) + "\n");
  nph::write_file_atomic(join(cfg.out_dir, "plot.csv"),
                         bike ? nph::bike_plot_csv(traj) : nph::portfolio_plot_csv(traj));

  nlohmann::json timings;
  timings["wall_seconds"] = std::chrono::duration<double>(t1 - t0).count();
  timings["steps"] = cfg.steps;
  nph::write_file_atomic(join(cfg.out_dir, "timings.json"), timings.dump(2) + "\n");

  if (bike) {
    std::cout << "bike-sim: cumulative reward " << rep["cumulative_reward"]
              << ", violation cost " << rep["cumulative_violation_cost"] << "\n";
  } else {
    std::cout << "backtest: final wealth " << rep["final_wealth"] << ", violations "
              << rep["violations"] << "\n";
  }
  return kExitOk;
}

int cmd_sample(const CommonArgs& args) {
  const nph::RunConfig cfg = load_config(args);
  if (cfg.domain == "toy") {
    nph::save_tree(cfg.toy->build_tree(), join(cfg.out_dir, "tree.json"));
  } else {
    const auto domain = nph::build_domain(cfg);
    const nph::ScenarioTree tree =
        domain->sample_tree(domain->initial_state(), cfg.np.n_scenarios,
                            cfg.np.lookahead_stages, nph::mix_seed(cfg.np.seed, 0x7265cafe, 1));
    nph::save_tree(tree, join(cfg.out_dir, "tree.json"));
  }
  std::cout << "sample: wrote tree.json\n";
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& report_paths, const std::string& out_dir) {
  if (report_paths.size() < 2) {
    throw nph::ConfigError("compare: need at least two report files");
  }
  std::vector<nlohmann::json> reports;
  std::vector<std::string> names;
  for (const std::string& path : report_paths) {
    std::ifstream in(path);
    if (!in) throw nph::ConfigError("compare: cannot open report: " + path);
    try {
      reports.push_back(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw nph::ConfigError("compare: " + path + ": " + e.what());
    }
    names.push_back(std::filesystem::path(path).parent_path().filename().string());
    if (names.back().empty()) names.back() = path;
  }
  std::filesystem::create_directories(out_dir);
  const nlohmann::json table = nph::comparison_table(reports, names);
  nph::write_file_atomic(join(out_dir, "comparison.json"), table.dump(2) + "\n");
  nph::write_file_atomic(join(out_dir, "comparison.csv"), nph::comparison_csv(table));
  std::cout << "compare: " << reports.size() << " runs -> comparison.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenario-based stochastic programming with expert-guided progressive hedging"};
  app.require_subcommand(1);

  CommonArgs common;
  std::vector<std::string> compare_paths;
  std::string compare_out = ".";

  auto add_common = [&common](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "run configuration (JSON)")
        ->required();
    cmd->add_option("--seed", common.seed, "override the config seed");
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_flag("--trace", common.trace, "emit per-iteration trace records");
  };

  CLI::App* solve = app.add_subcommand("solve", "one-shot solve on a fixed scenario tree");
  add_common(solve);
  CLI::App* backtest = app.add_subcommand("backtest", "rolling-horizon portfolio run");
  add_common(backtest);
  CLI::App* bikesim = app.add_subcommand("bike-sim", "rolling-horizon repositioning run");
  add_common(bikesim);
  CLI::App* sample = app.add_subcommand("sample", "dump a sampled scenario tree");
  add_common(sample);
  CLI::App* compare = app.add_subcommand("compare", "tabulate finished run reports");
  compare->add_option("reports", compare_paths, "report.json files")->required();
  compare->add_option("--out", compare_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (solve->parsed()) return cmd_solve(common);
    if (backtest->parsed()) return run_and_report(common, false);
    if (bikesim->parsed()) return run_and_report(common, true);
    if (sample->parsed()) return cmd_sample(common);
    if (compare->parsed()) return cmd_compare(compare_paths, compare_out);
  } catch (const nph::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nph::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
