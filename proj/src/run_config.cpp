#include "nph/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "nph/errors.hpp"

namespace nph {

namespace {

void expect_keys(const nlohmann::json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

template <typename T>
T get_or(const nlohmann::json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("key '") + key + "': " + e.what());
  }
}

std::vector<double> matrix_or_flat(const nlohmann::json& j, const std::string& where) {
  std::vector<double> out;
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  if (!j.empty() && j.front().is_array()) {
    for (const auto& row : j) {
      const auto r = row.get<std::vector<double>>();
      out.insert(out.end(), r.begin(), r.end());
    }
  } else {
    out = j.get<std::vector<double>>();
  }
  return out;
}

SolverBudget parse_budget(const nlohmann::json& j) {
  expect_keys(j, "ph.subproblem", {"max_iterations", "tolerance", "step_rule"});
  SolverBudget b;
  b.max_iterations = get_or(j, "max_iterations", b.max_iterations);
  b.tolerance = get_or(j, "tolerance", b.tolerance);
  const std::string rule = get_or<std::string>(j, "step_rule", "auto");
  if (rule == "auto") {
    b.step_rule = StepRule::automatic;
  } else if (rule == "subgradient") {
    b.step_rule = StepRule::subgradient;
  } else if (rule == "proximal_gradient") {
    b.step_rule = StepRule::proximal_gradient;
  } else {
    throw ConfigError("ph.subproblem.step_rule: unknown rule '" + rule + "'");
  }
  return b;
}

PHConfig parse_ph(const nlohmann::json& j) {
  expect_keys(j, "ph", {"penalty_nu", "epsilon", "max_outer_iterations", "alpha",
                        "adaptive_penalty", "subproblem"});
  PHConfig ph;
  ph.penalty_nu = get_or(j, "penalty_nu", ph.penalty_nu);
  ph.epsilon = get_or(j, "epsilon", ph.epsilon);
  ph.max_outer_iterations = get_or(j, "max_outer_iterations", ph.max_outer_iterations);
  if (j.contains("alpha")) ph.alpha = j.at("alpha").get<double>();
  ph.adaptive_penalty = get_or(j, "adaptive_penalty", false);
  if (j.contains("subproblem")) ph.budget = parse_budget(j.at("subproblem"));
  if (!(ph.epsilon > 0.0)) throw ConfigError("ph.epsilon: must be > 0");
  if (!(ph.penalty_nu > 0.0)) throw ConfigError("ph.penalty_nu: must be > 0");
  if (ph.alpha && !(*ph.alpha >= 0.0 && *ph.alpha < 1.0)) {
    throw ConfigError("ph.alpha: must lie in [0, 1)");
  }
  return ph;
}

KappaSchedule parse_kappa(const nlohmann::json& j) {
  expect_keys(j, "np.kappa", {"mode", "i_hat", "constant_value"});
  KappaSchedule k;
  const std::string mode = get_or<std::string>(j, "mode", "imitation");
  if (mode == "imitation") {
    k.mode = KappaSchedule::Mode::imitation;
  } else if (mode == "warm_start") {
    k.mode = KappaSchedule::Mode::warm_start;
  } else if (mode == "constant") {
    k.mode = KappaSchedule::Mode::constant;
  } else {
    throw ConfigError("np.kappa.mode: unknown mode '" + mode + "'");
  }
  k.i_hat = get_or(j, "i_hat", k.i_hat);
  k.constant_value = get_or(j, "constant_value", k.constant_value);
  if (k.i_hat < 1) throw ConfigError("np.kappa.i_hat: must be >= 1");
  if (k.constant_value < 0.0 || k.constant_value > 1.0) {
    throw ConfigError("np.kappa.constant_value: must lie in [0, 1]");
  }
  return k;
}

void parse_expert_into(const nlohmann::json& j, RunConfig::ExpertSpec& out,
                       const std::string& where) {
  expect_keys(j, where, {"kind", "weights", "path", "mu_l", "sigma_l", "base"});
  const std::string kind = get_or<std::string>(j, "kind", "uniform");
  if (kind == "uniform") {
    out.kind = ExpertKind::uniform;
  } else if (kind == "fixed_weights") {
    out.kind = ExpertKind::fixed_weights;
  } else if (kind == "affine") {
    out.kind = ExpertKind::affine;
  } else if (kind == "reserve_wrapped") {
    out.kind = ExpertKind::reserve_wrapped;
  } else {
    throw ConfigError(where + ".kind: unknown kind '" + kind + "'");
  }
  out.weights = get_or(j, "weights", std::vector<double>{});
  out.path = get_or<std::string>(j, "path", "");
  out.mu_l = get_or(j, "mu_l", out.mu_l);
  out.sigma_l = get_or(j, "sigma_l", out.sigma_l);
  if (out.kind == ExpertKind::fixed_weights && out.weights.empty()) {
    throw ConfigError(where + ": fixed_weights expert needs 'weights'");
  }
  if (out.kind == ExpertKind::affine) {
    if (out.path.empty()) throw ConfigError(where + ": affine expert needs 'path'");
    if (!std::filesystem::exists(out.path)) {
      throw ConfigError(where + ".path: file not found: " + out.path);
    }
  }
  if (out.kind == ExpertKind::reserve_wrapped) {
    out.base = std::make_unique<RunConfig::ExpertSpec>();
    if (j.contains("base")) {
      parse_expert_into(j.at("base"), *out.base, where + ".base");
      if (out.base->kind == ExpertKind::reserve_wrapped) {
        throw ConfigError(where + ".base: nested reserve wrapping is not supported");
      }
    }
  }
}

PortfolioConfig parse_portfolio(const nlohmann::json& j) {
  expect_keys(j, "portfolio",
              {"mean_log", "cov_log", "prices_csv", "liquidity", "initial_wealth",
               "objective", "stress_z"});
  PortfolioConfig cfg;
  if (j.contains("prices_csv")) {
    const std::string path = j.at("prices_csv").get<std::string>();
    if (!std::filesystem::exists(path)) {
      throw ConfigError("portfolio.prices_csv: file not found: " + path);
    }
    try {
      cfg.returns = fit_lognormal(load_prices_csv(path).gross_returns);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("portfolio.prices_csv: ") + e.what());
    }
  } else {
    if (!j.contains("mean_log") || !j.contains("cov_log")) {
      throw ConfigError("portfolio: need either prices_csv or mean_log+cov_log");
    }
    cfg.returns.mean_log = j.at("mean_log").get<std::vector<double>>();
    cfg.returns.cov_log = matrix_or_flat(j.at("cov_log"), "portfolio.cov_log");
    const std::size_t jr = cfg.returns.mean_log.size();
    if (cfg.returns.cov_log.size() != jr * jr) {
      throw ConfigError("portfolio.cov_log: size != assets^2");
    }
  }
  if (j.contains("liquidity")) {
    const auto& liq = j.at("liquidity");
    expect_keys(liq, "portfolio.liquidity", {"mu", "sigma"});
    cfg.liquidity.mu_l = get_or(liq, "mu", cfg.liquidity.mu_l);
    cfg.liquidity.sigma_l = get_or(liq, "sigma", cfg.liquidity.sigma_l);
  }
  cfg.initial_wealth = get_or(j, "initial_wealth", cfg.initial_wealth);
  const std::string obj = get_or<std::string>(j, "objective", "log");
  if (obj == "log") {
    cfg.log_objective = true;
  } else if (obj == "linear") {
    cfg.log_objective = false;
  } else {
    throw ConfigError("portfolio.objective: unknown objective '" + obj + "'");
  }
  cfg.stress_z = get_or(j, "stress_z", cfg.stress_z);
  return cfg;
}

BikeConfig parse_bike(const nlohmann::json& j) {
  expect_keys(j, "bike", {"stations", "bikes", "lower", "upper", "demand_mean",
                          "demand_cov", "instance"});
  if (j.contains("instance")) {
    const std::string path = j.at("instance").get<std::string>();
    if (!std::filesystem::exists(path)) {
      throw ConfigError("bike.instance: file not found: " + path);
    }
    try {
      return load_bike_instance(path);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bike.instance: ") + e.what());
    }
  }
  BikeConfig cfg;
  cfg.stations = get_or(j, "stations", cfg.stations);
  cfg.bikes = get_or(j, "bikes", cfg.bikes);
  cfg.lower = get_or(j, "lower", std::vector<double>{});
  cfg.upper = get_or(j, "upper", std::vector<double>{});
  cfg.demand.mean = get_or(j, "demand_mean", std::vector<double>{});
  if (j.contains("demand_cov")) {
    cfg.demand.cov = matrix_or_flat(j.at("demand_cov"), "bike.demand_cov");
  }
  return cfg;
}

ToyInstance parse_toy(const nlohmann::json& j) {
  expect_keys(j, "toy", {"stages", "action_dim", "gamma", "constraint", "scenarios"});
  ToyInstance inst;
  inst.stages = get_or(j, "stages", 1);
  inst.action_dim = get_or(j, "action_dim", 1);
  inst.gamma = get_or(j, "gamma", 1.0);
  if (j.contains("constraint")) {
    const auto& c = j.at("constraint");
    expect_keys(c, "toy.constraint", {"type", "lo", "hi"});
    const std::string type = get_or<std::string>(c, "type", "box");
    if (type == "box") {
      inst.constraint.type = ToyConstraint::Type::box;
    } else if (type == "simplex") {
      inst.constraint.type = ToyConstraint::Type::simplex;
    } else {
      throw ConfigError("toy.constraint.type: unknown type '" + type + "'");
    }
    inst.constraint.lo = get_or(c, "lo", 0.0);
    inst.constraint.hi = get_or(c, "hi", 1.0);
  }
  if (!j.contains("scenarios")) throw ConfigError("toy: missing 'scenarios'");
  for (std::size_t s = 0; s < j.at("scenarios").size(); ++s) {
    const auto& js = j.at("scenarios")[s];
    const std::string where = "toy.scenarios[" + std::to_string(s) + "]";
    expect_keys(js, where, {"prob", "stages"});
    ToyScenario sc;
    sc.prob = get_or(js, "prob", 1.0);
    if (!js.contains("stages")) throw ConfigError(where + ": missing 'stages'");
    for (const auto& jt : js.at("stages")) {
      expect_keys(jt, where + ".stages[]", {"curvature", "center", "linear"});
      ToyStageCost c;
      c.curvature = get_or(jt, "curvature", std::vector<double>(inst.action_dim, 1.0));
      c.center = get_or(jt, "center", std::vector<double>(inst.action_dim, 0.0));
      c.linear = get_or(jt, "linear", std::vector<double>(inst.action_dim, 0.0));
      if (static_cast<int>(c.curvature.size()) != inst.action_dim ||
          static_cast<int>(c.center.size()) != inst.action_dim ||
          static_cast<int>(c.linear.size()) != inst.action_dim) {
        throw ConfigError(where + ": cost vectors must have action_dim entries");
      }
      sc.stage_costs.push_back(std::move(c));
    }
    if (static_cast<int>(sc.stage_costs.size()) != inst.stages) {
      throw ConfigError(where + ": expected one cost block per stage");
    }
    inst.scenarios.push_back(std::move(sc));
  }
  return inst;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
  expect_keys(doc, "config",
              {"domain", "mode", "seed", "out", "steps", "ph", "np", "expert",
               "portfolio", "bike", "toy"});
  RunConfig cfg;
  cfg.echo = doc;
  cfg.domain = get_or<std::string>(doc, "domain", "");
  if (cfg.domain != "portfolio" && cfg.domain != "bike" && cfg.domain != "toy") {
    throw ConfigError("domain: expected portfolio, bike or toy, got '" + cfg.domain + "'");
  }
  const std::string mode = get_or<std::string>(doc, "mode", "np");
  if (mode == "np") {
    cfg.mode = RunMode::np;
  } else if (mode == "pure_sp") {
    cfg.mode = RunMode::pure_sp;
  } else if (mode == "expert_only") {
    cfg.mode = RunMode::expert_only;
  } else {
    throw ConfigError("mode: unknown mode '" + mode + "'");
  }
  cfg.np.seed = get_or<std::uint64_t>(doc, "seed", 0);
  cfg.out_dir = get_or<std::string>(doc, "out", ".");
  cfg.steps = get_or(doc, "steps", cfg.steps);
  if (cfg.steps < 1) throw ConfigError("steps: must be >= 1");

  if (doc.contains("ph")) cfg.np.ph = parse_ph(doc.at("ph"));
  if (doc.contains("np")) {
    const auto& j = doc.at("np");
    expect_keys(j, "np", {"kappa", "lookahead_stages", "scenarios", "discount_gamma"});
    if (j.contains("kappa")) cfg.np.kappa = parse_kappa(j.at("kappa"));
    cfg.np.lookahead_stages = get_or(j, "lookahead_stages", cfg.np.lookahead_stages);
    cfg.np.n_scenarios = get_or(j, "scenarios", cfg.np.n_scenarios);
    cfg.np.discount_gamma = get_or(j, "discount_gamma", cfg.np.discount_gamma);
    if (cfg.np.lookahead_stages < 1) throw ConfigError("np.lookahead_stages: must be >= 1");
    if (cfg.np.n_scenarios < 1) throw ConfigError("np.scenarios: must be >= 1");
    if (cfg.np.discount_gamma < 0.0 || cfg.np.discount_gamma > 1.0) {
      throw ConfigError("np.discount_gamma: must lie in [0, 1]");
    }
  }
  if (doc.contains("expert")) parse_expert_into(doc.at("expert"), cfg.expert, "expert");

  if (cfg.domain == "portfolio") {
    if (!doc.contains("portfolio")) throw ConfigError("portfolio: section missing");
    cfg.portfolio = parse_portfolio(doc.at("portfolio"));
  } else if (cfg.domain == "bike") {
    if (!doc.contains("bike")) throw ConfigError("bike: section missing");
    cfg.bike = parse_bike(doc.at("bike"));
  } else {
    if (!doc.contains("toy")) throw ConfigError("toy: section missing");
    cfg.toy = parse_toy(doc.at("toy"));
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return parse_run_config(doc);
}

Expert build_expert(const RunConfig::ExpertSpec& spec, int action_dim) {
  switch (spec.kind) {
    case ExpertKind::uniform:
      return Expert::uniform(action_dim);
    case ExpertKind::fixed_weights: {
      if (static_cast<int>(spec.weights.size()) != action_dim) {
        throw ConfigError("expert.weights: expected " + std::to_string(action_dim) +
                          " entries");
      }
      return Expert::fixed_weights(spec.weights);
    }
    case ExpertKind::affine: {
      Expert e = load_affine_expert(spec.path);
      if (e.action_dim() != action_dim) {
        throw ConfigError("expert.path: expert action_dim " +
                          std::to_string(e.action_dim()) + " != domain action_dim " +
                          std::to_string(action_dim));
      }
      return e;
    }
    case ExpertKind::reserve_wrapped: {
      const RunConfig::ExpertSpec* base = spec.base.get();
      Expert inner = base ? build_expert(*base, action_dim) : Expert::uniform(action_dim);
      return Expert::reserve_wrapped(std::move(inner), spec.mu_l, spec.sigma_l);
    }
  }
  throw ConfigError("expert.kind: unknown kind");
}

std::unique_ptr<Domain> build_domain(const RunConfig& config) {
  if (config.domain == "portfolio") {
    return std::make_unique<PortfolioDomain>(*config.portfolio);
  }
  if (config.domain == "bike") {
    return std::make_unique<BikeDomain>(*config.bike);
  }
  throw ConfigError("domain '" + config.domain + "' has no simulator");
}

}  // namespace nph
