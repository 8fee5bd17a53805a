#include "nph/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nph {

namespace {

std::string at_node(int i) { return "nodes[" + std::to_string(i) + "]: "; }

}  // namespace

ScenarioTree::ScenarioTree(int stages, int action_dim, int data_dim,
                           std::vector<TreeNode> nodes,
                           std::vector<ScenarioSeed> seeds)
    : stages_(stages), action_dim_(action_dim), data_dim_(data_dim),
      nodes_(std::move(nodes)), seeds_(std::move(seeds)) {
  if (stages_ < 1) throw std::invalid_argument("scenario tree: stages must be >= 1");
  if (action_dim_ < 1) throw std::invalid_argument("scenario tree: action_dim must be >= 1");
  if (data_dim_ < 0) throw std::invalid_argument("scenario tree: data_dim must be >= 0");
  validate_and_index();
}

void ScenarioTree::validate_and_index() {
  const int n = static_cast<int>(nodes_.size());
  if (n == 0) throw std::invalid_argument("scenario tree: empty node list");

  int root = -1;
  std::vector<std::vector<int>> children(n);
  for (int i = 0; i < n; ++i) {
    const TreeNode& nd = nodes_[i];
    if (nd.id != i) throw std::invalid_argument(at_node(i) + "id must equal its index");
    if (nd.stage < 1 || nd.stage > stages_) {
      throw std::invalid_argument(at_node(i) + "stage out of range");
    }
    if (nd.prob < 0.0 || nd.prob > 1.0 + 1e-12 || !std::isfinite(nd.prob)) {
      throw std::invalid_argument(at_node(i) + "conditional probability outside [0, 1]");
    }
    if (nd.parent == -1) {
      if (nd.stage != 1) throw std::invalid_argument(at_node(i) + "parentless node not at stage 1");
      if (root != -1) throw std::invalid_argument(at_node(i) + "second root found");
      root = i;
    } else {
      if (nd.parent < 0 || nd.parent >= n) {
        throw std::invalid_argument(at_node(i) + "parent index out of range");
      }
      if (nodes_[nd.parent].stage != nd.stage - 1) {
        throw std::invalid_argument(at_node(i) + "parent is not one stage above");
      }
      children[nd.parent].push_back(i);
    }
  }
  if (root == -1) throw std::invalid_argument("scenario tree: no root node");

  for (int i = 0; i < n; ++i) {
    if (children[i].empty()) {
      if (nodes_[i].stage != stages_) {
        throw std::invalid_argument(at_node(i) + "leaf before the final stage");
      }
      continue;
    }
    double sum = 0.0;
    for (int c : children[i]) sum += nodes_[c].prob;
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument(at_node(i) + "children probabilities sum to " +
                                  std::to_string(sum) + ", expected 1");
    }
  }

  // depth-first leaf order; children visited in node-array order
  std::vector<int> leaf_order;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (children[v].empty()) {
      leaf_order.push_back(v);
      continue;
    }
    for (auto it = children[v].rbegin(); it != children[v].rend(); ++it) stack.push_back(*it);
  }

  // group scenario seeds by leaf, preserving input order within a leaf
  std::vector<std::vector<int>> by_leaf(n);
  for (int k = 0; k < static_cast<int>(seeds_.size()); ++k) {
    const ScenarioSeed& sd = seeds_[k];
    if (sd.leaf < 0 || sd.leaf >= n || !children[sd.leaf].empty() ||
        nodes_[sd.leaf].stage != stages_) {
      throw std::invalid_argument("scenario " + std::to_string(k) +
                                  ": leaf reference is not a final-stage leaf");
    }
    if (sd.data.size() != static_cast<std::size_t>(stages_) * data_dim_) {
      throw std::invalid_argument("scenario " + std::to_string(k) +
                                  ": data length != stages*data_dim");
    }
    for (double v : sd.data) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("scenario " + std::to_string(k) + ": non-finite data entry");
      }
    }
    by_leaf[sd.leaf].push_back(k);
  }

  std::vector<ScenarioSeed> ordered;
  ordered.reserve(seeds_.size());
  for (int leaf : leaf_order) {
    if (by_leaf[leaf].empty()) {
      throw std::invalid_argument(at_node(leaf) + "leaf has no scenario data");
    }
    double wsum = 0.0;
    for (int k : by_leaf[leaf]) wsum += seeds_[k].weight;
    if (std::abs(wsum - 1.0) > 1e-12) {
      throw std::invalid_argument(at_node(leaf) + "scenario weights sum to " +
                                  std::to_string(wsum) + ", expected 1");
    }
    for (int k : by_leaf[leaf]) ordered.push_back(std::move(seeds_[k]));
  }
  seeds_ = std::move(ordered);

  const int S = num_scenarios();
  paths_.assign(S, {});
  q_.assign(S, 0.0);
  double qsum = 0.0;
  for (int s = 0; s < S; ++s) {
    std::vector<int> path(stages_);
    int v = seeds_[s].leaf;
    double q = seeds_[s].weight;
    for (int t = stages_; t >= 1; --t) {
      path[t - 1] = v;
      q *= nodes_[v].prob;
      v = nodes_[v].parent;
    }
    paths_[s] = std::move(path);
    q_[s] = q;
    qsum += q;
  }
  if (std::abs(qsum - 1.0) > 1e-10) {
    throw std::invalid_argument("scenario tree: scenario probabilities sum to " +
                                std::to_string(qsum) + ", expected 1");
  }

  // contiguous group ranges per stage (DFS order makes runs contiguous)
  group_first_.assign(static_cast<std::size_t>(stages_) * S, 0);
  group_last_.assign(static_cast<std::size_t>(stages_) * S, 0);
  for (int t = 1; t <= stages_; ++t) {
    int s = 0;
    while (s < S) {
      int e = s;
      while (e + 1 < S && paths_[e + 1][t - 1] == paths_[s][t - 1]) ++e;
      for (int k = s; k <= e; ++k) {
        group_first_[(t - 1) * S + k] = s;
        group_last_[(t - 1) * S + k] = e;
      }
      s = e + 1;
    }
  }

  // data revealed before stage t must agree across scenarios grouped at t:
  // period-k data constant within every stage-(k+1) group
  for (int k = 1; k < stages_; ++k) {
    for (int s = 1; s < S; ++s) {
      if (paths_[s][k] != paths_[s - 1][k]) continue;  // different stage-(k+1) node
      auto a = period_data(s - 1, k);
      auto b = period_data(s, k);
      if (!std::equal(a.begin(), a.end(), b.begin())) {
        throw std::invalid_argument(
            "scenarios " + std::to_string(s - 1) + " and " + std::to_string(s) +
            " share the stage-" + std::to_string(k + 1) + " node but differ in period-" +
            std::to_string(k) + " data");
      }
    }
  }
}

ScenarioTree ScenarioTree::two_layer(int n_scenarios, int stages, int action_dim,
                                     int data_dim, std::vector<double> probs,
                                     std::vector<std::vector<double>> data) {
  if (n_scenarios < 1) throw std::invalid_argument("two_layer: need at least one scenario");
  if (static_cast<int>(probs.size()) != n_scenarios ||
      static_cast<int>(data.size()) != n_scenarios) {
    throw std::invalid_argument("two_layer: probs/data size mismatch");
  }
  std::vector<TreeNode> nodes;
  std::vector<ScenarioSeed> seeds;
  nodes.push_back(TreeNode{0, 1, -1, 1.0});
  if (stages == 1) {
    for (int s = 0; s < n_scenarios; ++s) {
      seeds.push_back(ScenarioSeed{0, probs[s], std::move(data[s])});
    }
  } else {
    for (int s = 0; s < n_scenarios; ++s) {
      int prev = 0;
      for (int t = 2; t <= stages; ++t) {
        int id = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{id, t, prev, t == 2 ? probs[s] : 1.0});
        prev = id;
      }
      seeds.push_back(ScenarioSeed{prev, 1.0, std::move(data[s])});
    }
  }
  return ScenarioTree(stages, action_dim, data_dim, std::move(nodes), std::move(seeds));
}

void ScenarioTree::check_scenario(int s) const {
  if (s < 0 || s >= num_scenarios()) {
    throw std::out_of_range("scenario index " + std::to_string(s) + " out of range");
  }
}

void ScenarioTree::check_stage(int t) const {
  if (t < 1 || t > stages_) {
    throw std::out_of_range("stage " + std::to_string(t) + " out of range");
  }
}

int ScenarioTree::node_at(int s, int t) const {
  check_scenario(s);
  check_stage(t);
  return paths_[s][t - 1];
}

std::span<const double> ScenarioTree::period_data(int s, int t) const {
  check_scenario(s);
  check_stage(t);
  return {seeds_[s].data.data() + static_cast<std::size_t>(t - 1) * data_dim_,
          static_cast<std::size_t>(data_dim_)};
}

double ScenarioTree::scenario_probability(int s) const {
  check_scenario(s);
  return q_[s];
}

std::pair<int, int> ScenarioTree::stage_group(int s, int t) const {
  check_scenario(s);
  check_stage(t);
  const int S = num_scenarios();
  return {group_first_[(t - 1) * S + s], group_last_[(t - 1) * S + s]};
}

double scenario_probability(const ScenarioTree& tree, int s) {
  return tree.scenario_probability(s);
}

int t_max(const ScenarioTree& tree, int s1, int s2) {
  tree.check_scenario(s1);
  tree.check_scenario(s2);
  int last = 0;
  for (int t = 1; t <= tree.num_stages(); ++t) {
    if (tree.node_at(s1, t) != tree.node_at(s2, t)) break;
    last = t;
  }
  if (s1 == s2) return tree.num_stages();
  return last;
}

int sibling(const ScenarioTree& tree, int s, int t) {
  auto [first, last] = tree.stage_group(s, t);
  return s == last ? first : s + 1;
}

PolicyMapping project_nonanticipative(const ScenarioTree& tree, const PolicyMapping& x) {
  if (!x.shape_matches(tree)) {
    throw std::invalid_argument("project_nonanticipative: shape mismatch");
  }
  const int S = tree.num_scenarios();
  const int n = tree.action_dim();
  PolicyMapping out = x;
  std::vector<double> avg(n);
  for (int t = 1; t <= tree.num_stages(); ++t) {
    int s = 0;
    while (s < S) {
      auto [first, last] = tree.stage_group(s, t);
      double qsum = 0.0;
      std::fill(avg.begin(), avg.end(), 0.0);
      for (int k = first; k <= last; ++k) {
        const double q = tree.scenario_probability(k);
        qsum += q;
        auto a = x.action(k, t - 1);
        for (int j = 0; j < n; ++j) avg[j] += q * a[j];
      }
      if (qsum <= 0.0) {
        throw std::runtime_error("project_nonanticipative: zero-probability node group at stage " +
                                 std::to_string(t));
      }
      for (int j = 0; j < n; ++j) avg[j] /= qsum;
      for (int k = first; k <= last; ++k) {
        auto a = out.action(k, t - 1);
        for (int j = 0; j < n; ++j) a[j] = avg[j];
      }
      s = last + 1;
    }
  }
  return out;
}

double nonanticipativity_residual(const ScenarioTree& tree, const PolicyMapping& x) {
  if (!x.shape_matches(tree)) {
    throw std::invalid_argument("nonanticipativity_residual: shape mismatch");
  }
  double worst = 0.0;
  for (int t = 1; t <= tree.num_stages(); ++t) {
    for (int s = 0; s < tree.num_scenarios(); ++s) {
      const int nu = sibling(tree, s, t);
      if (nu == s) continue;
      auto a = x.action(s, t - 1);
      auto b = x.action(nu, t - 1);
      for (int j = 0; j < tree.action_dim(); ++j) {
        worst = std::max(worst, std::abs(a[j] - b[j]));
      }
    }
  }
  return worst;
}

}  // namespace nph
