#pragma once

#include <string>

#include <json.hpp>

#include "nph/scenario_tree.hpp"

namespace nph {

// Scenario-tree document:
//   {"stages": T, "action_dim": n,
//    "nodes": [{"id": 0, "stage": 1, "parent": null, "prob": 1.0}, ...],
//    "scenario_data": {"<leaf id>": [flat stages*data_dim array], ...}}
// Loaders validate the structural invariants and report offending entries by
// position. Trees with several scenarios per leaf are not representable in
// this format.
nlohmann::json tree_to_json(const ScenarioTree& tree);
ScenarioTree tree_from_json(const nlohmann::json& doc);

void save_tree(const ScenarioTree& tree, const std::string& path);
ScenarioTree load_tree(const std::string& path);

}  // namespace nph
