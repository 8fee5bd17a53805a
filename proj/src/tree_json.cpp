#include "nph/tree_json.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace nph {

nlohmann::json tree_to_json(const ScenarioTree& tree) {
  std::set<int> leaves;
  for (const auto& seed : tree.seeds()) {
    if (!leaves.insert(seed.leaf).second) {
      throw std::invalid_argument(
          "tree_to_json: trees with shared leaves are not representable");
    }
  }
  nlohmann::json doc;
  doc["stages"] = tree.num_stages();
  doc["action_dim"] = tree.action_dim();
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& nd : tree.nodes()) {
    nlohmann::json j;
    j["id"] = nd.id;
    j["stage"] = nd.stage;
    if (nd.parent < 0) {
      j["parent"] = nullptr;
    } else {
      j["parent"] = nd.parent;
    }
    j["prob"] = nd.prob;
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  nlohmann::json data = nlohmann::json::object();
  for (const auto& seed : tree.seeds()) {
    data[std::to_string(seed.leaf)] = seed.data;
  }
  doc["scenario_data"] = std::move(data);
  return doc;
}

ScenarioTree tree_from_json(const nlohmann::json& doc) {
  for (const char* key : {"stages", "action_dim", "nodes", "scenario_data"}) {
    if (!doc.contains(key)) {
      throw std::invalid_argument(std::string("tree document: missing field '") + key + "'");
    }
  }
  const int stages = doc.at("stages").get<int>();
  const int action_dim = doc.at("action_dim").get<int>();
  if (!doc.at("nodes").is_array()) {
    throw std::invalid_argument("tree document: 'nodes' must be an array");
  }

  std::vector<TreeNode> nodes;
  nodes.reserve(doc.at("nodes").size());
  int idx = 0;
  for (const auto& j : doc.at("nodes")) {
    const std::string where = "nodes[" + std::to_string(idx) + "]: ";
    for (const char* key : {"id", "stage", "prob"}) {
      if (!j.contains(key)) {
        throw std::invalid_argument(where + "missing field '" + key + "'");
      }
    }
    TreeNode nd;
    nd.id = j.at("id").get<int>();
    if (nd.id != idx) {
      throw std::invalid_argument(where + "id must equal the array position");
    }
    nd.stage = j.at("stage").get<int>();
    nd.parent = (!j.contains("parent") || j.at("parent").is_null())
                    ? -1
                    : j.at("parent").get<int>();
    nd.prob = j.at("prob").get<double>();
    nodes.push_back(nd);
    ++idx;
  }

  const auto& data = doc.at("scenario_data");
  if (!data.is_object()) {
    throw std::invalid_argument("tree document: 'scenario_data' must be an object");
  }
  std::vector<ScenarioSeed> seeds;
  int data_dim = -1;
  for (auto it = data.begin(); it != data.end(); ++it) {
    const std::string where = "scenario_data['" + it.key() + "']: ";
    int leaf;
    try {
      leaf = std::stoi(it.key());
    } catch (const std::exception&) {
      throw std::invalid_argument(where + "key is not a node id");
    }
    std::vector<double> values;
    try {
      values = it.value().get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(where + "value is not a numeric array");
    }
    if (stages > 0 && values.size() % static_cast<std::size_t>(stages) != 0) {
      throw std::invalid_argument(where + "length " + std::to_string(values.size()) +
                                  " is not divisible by stages " + std::to_string(stages));
    }
    const int dim = static_cast<int>(values.size()) / stages;
    if (data_dim == -1) {
      data_dim = dim;
    } else if (data_dim != dim) {
      throw std::invalid_argument(where + "data length disagrees with earlier scenarios");
    }
    seeds.push_back(ScenarioSeed{leaf, 1.0, std::move(values)});
  }
  if (seeds.empty()) {
    throw std::invalid_argument("tree document: 'scenario_data' is empty");
  }
  return ScenarioTree(stages, action_dim, data_dim, std::move(nodes), std::move(seeds));
}

void save_tree(const ScenarioTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write tree file: " + path);
  out << tree_to_json(tree).dump(2) << "\n";
}

ScenarioTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tree file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("tree file " + path + ": " + e.what());
  }
  try {
    return tree_from_json(doc);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("tree file " + path + ": " + e.what());
  }
}

}  // namespace nph
