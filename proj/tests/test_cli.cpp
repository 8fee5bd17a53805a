#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nph/tree_json.hpp"

namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("nph_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }

  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = dir / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args, const Sandbox& box, std::string* output = nullptr) {
  const std::string log = box.path("last_output.txt");
  const std::string cmd = std::string(NPH_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kToyConfig = R"({
  "domain": "toy",
  "mode": "pure_sp",
  "seed": 5,
  "ph": {"epsilon": 1e-7, "max_outer_iterations": 2000,
         "subproblem": {"max_iterations": 4000, "tolerance": 1e-12}},
  "toy": {
    "stages": 1, "action_dim": 1,
    "constraint": {"type": "box", "lo": 0.0, "hi": 10.0},
    "scenarios": [
      {"prob": 0.5, "stages": [{"curvature": [2.0], "center": [1.0], "linear": [0.0]}]},
      {"prob": 0.5, "stages": [{"curvature": [2.0], "center": [3.0], "linear": [0.0]}]}
    ]
  }
})";

std::string flat_portfolio_config(const std::string& mode, int steps) {
  nlohmann::json j;
  j["domain"] = "portfolio";
  j["mode"] = mode;
  j["seed"] = 40;
  j["steps"] = steps;
  j["ph"] = {{"epsilon", 1e-4}, {"max_outer_iterations", 80}};
  j["np"] = {{"lookahead_stages", 2}, {"scenarios", 5}};
  j["expert"] = {{"kind", "uniform"}};
  j["portfolio"] = {{"mean_log", {0.0, 0.0}},
                    {"cov_log", {{0.0, 0.0}, {0.0, 0.0}}},
                    {"liquidity", {{"mu", 0.0}, {"sigma", 0.0}}},
                    {"stress_z", 0.0}};
  return j.dump();
}

}  // namespace

TEST_CASE("solve writes a solution and a trace") {
  Sandbox box;
  const std::string cfg = box.file("toy.json", kToyConfig);
  const std::string out = box.path("run1");
  std::string log;
  const int code = run_cli("solve --config " + cfg + " --out " + out + " --trace", box, &log);
  CHECK(code == 0);

  const nlohmann::json sol = nlohmann::json::parse(slurp(out + "/solution.json"));
  CHECK(sol.at("converged").get<bool>());
  CHECK(sol.at("x_star")[0][0][0].get<double>() == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(sol.at("x_star")[1][0][0].get<double>() == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(sol.at("delta_history").back().get<double>() <= 1e-7);

  // the trace is line-delimited and ends below the threshold
  std::istringstream trace(slurp(out + "/trace.jsonl"));
  std::string line, last;
  int lines = 0;
  while (std::getline(trace, line)) {
    if (!line.empty()) {
      last = line;
      ++lines;
    }
  }
  CHECK(lines == sol.at("iterations").get<int>());
  CHECK(nlohmann::json::parse(last).at("delta").get<double>() <= 1e-7);
}

TEST_CASE("solve flags nonconvergence with exit code 3") {
  Sandbox box;
  nlohmann::json j = nlohmann::json::parse(kToyConfig);
  j["ph"]["epsilon"] = 1e-12;
  j["ph"]["max_outer_iterations"] = 5;
  const std::string cfg = box.file("cap.json", j.dump());
  const int code = run_cli("solve --config " + cfg + " --out " + box.path("run2"), box);
  CHECK(code == 3);
  const nlohmann::json sol = nlohmann::json::parse(slurp(box.path("run2") + "/solution.json"));
  CHECK_FALSE(sol.at("converged").get<bool>());
}

TEST_CASE("unknown config keys exit with code 2 and name the key") {
  Sandbox box;
  nlohmann::json j = nlohmann::json::parse(kToyConfig);
  j["typo_key"] = 1;
  const std::string cfg = box.file("bad.json", j.dump());
  std::string log;
  const int code = run_cli("solve --config " + cfg + " --out " + box.path("run3"), box, &log);
  CHECK(code == 2);
  CHECK(log.find("typo_key") != std::string::npos);
}

TEST_CASE("expert-only backtest on a flat market holds wealth at one") {
  Sandbox box;
  const std::string cfg = box.file("flat.json", flat_portfolio_config("expert_only", 6));
  const std::string out = box.path("flat_run");
  const int code = run_cli("backtest --config " + cfg + " --out " + out, box);
  CHECK(code == 0);
  const nlohmann::json rep = nlohmann::json::parse(slurp(out + "/report.json"));
  CHECK(rep.at("final_wealth").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.at("metrics").at("mdd").get<double>() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.at("violations").get<int>() == 0);
}

TEST_CASE("repeated runs produce byte-identical artifacts") {
  Sandbox box;
  const std::string cfg = box.file("det.json", flat_portfolio_config("np", 4));
  const std::string out1 = box.path("det1");
  const std::string out2 = box.path("det2");
  CHECK(run_cli("backtest --config " + cfg + " --out " + out1, box) == 0);
  CHECK(run_cli("backtest --config " + cfg + " --out " + out2, box) == 0);
  CHECK(slurp(out1 + "/trajectory.jsonl") == slurp(out2 + "/trajectory.jsonl"));
  CHECK(slurp(out1 + "/report.json") == slurp(out2 + "/report.json"));
  CHECK(slurp(out1 + "/plot.csv") == slurp(out2 + "/plot.csv"));
}

TEST_CASE("constrained runs keep the liquid value above the demand line") {
  Sandbox box;
  nlohmann::json j = nlohmann::json::parse(flat_portfolio_config("np", 8));
  j["portfolio"]["mean_log"] = {0.05, 0.04};
  j["portfolio"]["cov_log"] = {{4e-4, 0.0}, {0.0, 4e-4}};
  j["portfolio"]["liquidity"] = {{"mu", 0.025}, {"sigma", 0.01}};
  j["portfolio"]["stress_z"] = 4.0;
  j["np"]["scenarios"] = 10;
  const std::string cfg = box.file("liq.json", j.dump());
  const std::string out = box.path("liq_run");
  CHECK(run_cli("backtest --config " + cfg + " --out " + out, box) == 0);

  std::istringstream plot(slurp(out + "/plot.csv"));
  std::string line;
  std::getline(plot, line);
  CHECK(line == "step,wealth,liquid_value,cumulative_demand");
  int rows = 0;
  while (std::getline(plot, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    std::getline(ss, cell, ',');
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    REQUIRE(cells.size() == 3);
    CHECK(cells[1] >= cells[2]);  // liquid value covers the cumulative demand
    ++rows;
  }
  CHECK(rows == 8);
}

TEST_CASE("bike-sim reports zero violation cost and compare tabulates runs") {
  Sandbox box;
  nlohmann::json j;
  j["domain"] = "bike";
  j["mode"] = "np";
  j["seed"] = 3;
  j["steps"] = 4;
  j["ph"] = {{"epsilon", 1e-3}, {"max_outer_iterations", 60},
             {"subproblem", {{"max_iterations", 150}}}};
  j["np"] = {{"lookahead_stages", 2}, {"scenarios", 8}};
  j["expert"] = {{"kind", "uniform"}};
  j["bike"] = {{"stations", 2}, {"bikes", 10},   {"lower", {1.0, 1.0}},
               {"upper", {9.0, 9.0}},            {"demand_mean", {3.0, 4.0}},
               {"demand_cov", {{1.0, 0.2}, {0.2, 1.5}}}};
  const std::string cfg = box.file("bike.json", j.dump());
  const std::string out = box.path("bike_run");
  CHECK(run_cli("bike-sim --config " + cfg + " --out " + out, box) == 0);
  const nlohmann::json rep = nlohmann::json::parse(slurp(out + "/report.json"));
  CHECK(rep.at("cumulative_violation_cost").get<int>() == 0);
  CHECK(rep.at("cumulative_reward").get<double>() <= 0.0);

  // comparison table over one portfolio and one bike run
  const std::string pcfg = box.file("flat2.json", flat_portfolio_config("expert_only", 4));
  const std::string pout = box.path("flat2_run");
  CHECK(run_cli("backtest --config " + pcfg + " --out " + pout, box) == 0);
  const std::string cmp = box.path("cmp");
  CHECK(run_cli("compare " + out + "/report.json " + pout + "/report.json --out " + cmp,
                box) == 0);
  const std::string csv = slurp(cmp + "/comparison.csv");
  CHECK(csv.find("cumulative_violation_cost") != std::string::npos);
  CHECK(csv.find("returns") != std::string::npos);
  std::istringstream rows(csv);
  std::string line;
  int count = 0;
  while (std::getline(rows, line)) ++count;
  CHECK(count == 3);  // header plus two runs

  // a single report is not comparable
  std::string log;
  CHECK(run_cli("compare " + out + "/report.json --out " + cmp, box, &log) == 2);
}

TEST_CASE("sample dumps a loadable scenario tree") {
  Sandbox box;
  nlohmann::json j = nlohmann::json::parse(flat_portfolio_config("np", 4));
  j["np"]["scenarios"] = 5;
  j["np"]["lookahead_stages"] = 3;
  const std::string cfg = box.file("sample.json", j.dump());
  const std::string out = box.path("sample_out");
  CHECK(run_cli("sample --config " + cfg + " --out " + out, box) == 0);
  const nph::ScenarioTree tree = nph::load_tree(out + "/tree.json");
  CHECK(tree.num_scenarios() == 5);
  CHECK(tree.num_stages() == 3);
  CHECK(tree.action_dim() == 3);
}

TEST_CASE("missing config file exits with code 2") {
  Sandbox box;
  std::string log;
  const int code = run_cli("solve --config /nonexistent/nope.json", box, &log);
  CHECK(code == 2);
}
