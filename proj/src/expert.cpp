#include "nph/expert.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "nph/projections.hpp"

namespace nph {

Expert Expert::uniform(int action_dim) {
  if (action_dim < 1) throw std::invalid_argument("uniform expert: action_dim must be >= 1");
  Expert e;
  e.kind_ = ExpertKind::uniform;
  e.action_dim_ = action_dim;
  return e;
}

Expert Expert::fixed_weights(std::vector<double> weights) {
  if (weights.empty()) throw std::invalid_argument("fixed expert: empty weights");
  for (double w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("fixed expert: non-finite weight");
  }
  project_simplex({weights.data(), weights.size()});
  Expert e;
  e.kind_ = ExpertKind::fixed_weights;
  e.action_dim_ = static_cast<int>(weights.size());
  e.weights_ = std::move(weights);
  return e;
}

Expert Expert::affine(int feature_dim, int action_dim,
                      std::vector<double> weights_row_major, std::vector<double> bias) {
  if (feature_dim < 1 || action_dim < 1) {
    throw std::invalid_argument("affine expert: dimensions must be positive");
  }
  if (weights_row_major.size() != static_cast<std::size_t>(feature_dim) * action_dim) {
    throw std::invalid_argument("affine expert: weights size != action_dim*feature_dim");
  }
  if (bias.size() != static_cast<std::size_t>(action_dim)) {
    throw std::invalid_argument("affine expert: bias size != action_dim");
  }
  for (double w : weights_row_major) {
    if (!std::isfinite(w)) throw std::invalid_argument("affine expert: non-finite weight");
  }
  for (double b : bias) {
    if (!std::isfinite(b)) throw std::invalid_argument("affine expert: non-finite bias");
  }
  Expert e;
  e.kind_ = ExpertKind::affine;
  e.action_dim_ = action_dim;
  e.feature_dim_ = feature_dim;
  e.weights_ = std::move(weights_row_major);
  e.bias_ = std::move(bias);
  return e;
}

Expert Expert::reserve_wrapped(Expert base, double mu_l, double sigma_l) {
  if (sigma_l < 0.0) throw std::invalid_argument("reserve expert: negative sigma");
  Expert e;
  e.kind_ = ExpertKind::reserve_wrapped;
  e.action_dim_ = base.action_dim();
  e.mu_l_ = mu_l;
  e.sigma_l_ = sigma_l;
  e.base_ = std::make_shared<Expert>(std::move(base));
  return e;
}

std::vector<double> apply_cash_reserve(std::span<const double> base_action, double rho) {
  std::vector<double> out(base_action.begin(), base_action.end());
  if (out.empty()) throw std::invalid_argument("apply_cash_reserve: empty action");
  rho = std::clamp(rho, 0.0, 1.0);
  if (out[0] >= rho) return out;
  double rest = 0.0;
  for (std::size_t j = 1; j < out.size(); ++j) rest += out[j];
  out[0] = rho;
  if (rest <= 0.0) {
    // nothing to rescale; park everything liquid
    out[0] = 1.0;
    for (std::size_t j = 1; j < out.size(); ++j) out[j] = 0.0;
    return out;
  }
  const double scale = (1.0 - rho) / rest;
  for (std::size_t j = 1; j < out.size(); ++j) out[j] *= scale;
  return out;
}

std::vector<double> Expert::act(const std::vector<double>& state,
                                const ProblemSpec& problem,
                                bool* reserve_saturated) const {
  if (reserve_saturated) *reserve_saturated = false;
  switch (kind_) {
    case ExpertKind::uniform:
      return std::vector<double>(action_dim_, 1.0 / action_dim_);
    case ExpertKind::fixed_weights:
      return weights_;
    case ExpertKind::affine: {
      if (!problem.features) {
        throw std::invalid_argument("affine expert: problem provides no features");
      }
      const std::vector<double> phi = problem.features(state);
      if (static_cast<int>(phi.size()) != feature_dim_) {
        throw std::invalid_argument("affine expert: feature_dim " +
                                    std::to_string(feature_dim_) + " != state features " +
                                    std::to_string(phi.size()));
      }
      std::vector<double> a(bias_);
      for (int i = 0; i < action_dim_; ++i) {
        for (int k = 0; k < feature_dim_; ++k) {
          a[i] += weights_[static_cast<std::size_t>(i) * feature_dim_ + k] * phi[k];
        }
      }
      project_simplex({a.data(), a.size()});
      return a;
    }
    case ExpertKind::reserve_wrapped: {
      if (!problem.reserve_fraction) {
        throw std::invalid_argument("reserve expert: domain provides no reserve rule");
      }
      const std::vector<double> base = base_->act(state, problem, nullptr);
      const double rho = problem.reserve_fraction(state, mu_l_, sigma_l_);
      if (rho > 1.0 && reserve_saturated) *reserve_saturated = true;
      return apply_cash_reserve(base, rho);
    }
  }
  throw std::logic_error("expert: unknown kind");
}

PolicyMapping query_expert(const Expert& expert, const std::vector<double>& state,
                           const ScenarioTree& tree, const ProblemSpec& problem) {
  if (expert.action_dim() != tree.action_dim()) {
    throw std::invalid_argument("query_expert: expert action_dim " +
                                std::to_string(expert.action_dim()) + " != tree action_dim " +
                                std::to_string(tree.action_dim()));
  }
  PolicyMapping x(tree.num_scenarios(), tree.num_stages(), tree.action_dim());
  for (int s = 0; s < tree.num_scenarios(); ++s) {
    std::vector<double> st = state;
    for (int t = 1; t <= tree.num_stages(); ++t) {
      const std::vector<double> a = expert.act(st, problem);
      std::copy(a.begin(), a.end(), x.action(s, t - 1).begin());
      if (t < tree.num_stages()) {
        if (!problem.transition) {
          throw std::invalid_argument("query_expert: problem provides no transition");
        }
        st = problem.transition(st, a, tree.period_data(s, t));
      }
    }
  }
  return project_nonanticipative(tree, x);
}

Expert load_affine_expert(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open expert file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    // overflowing literals (non-finite values) are rejected here with the
    // offending token named
    throw std::runtime_error("expert file " + path + ": " + e.what());
  }
  for (const char* key : {"feature_dim", "action_dim", "weights", "bias"}) {
    if (!j.contains(key)) {
      throw std::runtime_error("expert file " + path + ": missing field '" + key + "'");
    }
  }
  const int fdim = j.at("feature_dim").get<int>();
  const int adim = j.at("action_dim").get<int>();
  std::vector<double> w, b;
  try {
    w = j.at("weights").get<std::vector<double>>();
    b = j.at("bias").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("expert file " + path + ": " + e.what());
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!std::isfinite(w[k])) {
      throw std::runtime_error("expert file " + path + ": weights[" + std::to_string(k) +
                               "] is not finite");
    }
  }
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (!std::isfinite(b[k])) {
      throw std::runtime_error("expert file " + path + ": bias[" + std::to_string(k) +
                               "] is not finite");
    }
  }
  try {
    return Expert::affine(fdim, adim, std::move(w), std::move(b));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("expert file " + path + ": " + e.what());
  }
}

void save_affine_expert(const Expert& expert, const std::string& path) {
  if (expert.kind() != ExpertKind::affine) {
    throw std::invalid_argument("save_affine_expert: expert is not affine");
  }
  nlohmann::json j;
  j["feature_dim"] = expert.feature_dim();
  j["action_dim"] = expert.action_dim();
  j["weights"] = expert.weights();
  j["bias"] = expert.bias();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write expert file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace nph
