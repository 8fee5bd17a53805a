#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "nph/bike.hpp"
#include "nph/expert.hpp"
#include "nph/np_controller.hpp"
#include "nph/portfolio.hpp"
#include "nph/toy.hpp"

namespace nph {

// A full run description parsed from a single JSON document. Unknown keys
// are rejected so configs stay reproducible.
struct RunConfig {
  nlohmann::json echo;  // the parsed document, embedded in reports

  std::string domain;  // portfolio | bike | toy
  RunMode mode = RunMode::np;
  std::string out_dir = ".";
  int steps = 30;
  bool trace = false;
  NPConfig np;

  struct ExpertSpec {
    ExpertKind kind = ExpertKind::uniform;
    std::vector<double> weights;
    std::string path;  // affine experts loaded from file
    double mu_l = 0.025;
    double sigma_l = 0.01;
    std::unique_ptr<ExpertSpec> base;
  };
  ExpertSpec expert;

  std::optional<PortfolioConfig> portfolio;
  std::optional<BikeConfig> bike;
  std::optional<ToyInstance> toy;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

Expert build_expert(const RunConfig::ExpertSpec& spec, int action_dim);
std::unique_ptr<Domain> build_domain(const RunConfig& config);

}  // namespace nph
