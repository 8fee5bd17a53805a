#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nph/policy.hpp"

namespace nph {

struct TreeNode {
  int id = -1;        // dense index into the node array
  int stage = 1;      // 1-based
  int parent = -1;    // node index, -1 for the root
  double prob = 1.0;  // conditional probability given the parent
};

// One scenario attached to a leaf. Several scenarios may share a leaf when
// they are indistinguishable at every decision stage and differ only in the
// final period's realization (weights are conditional on the leaf and sum to
// one within it); ordinary trees use one scenario per leaf with weight 1.
struct ScenarioSeed {
  int leaf = -1;
  double weight = 1.0;
  std::vector<double> data;  // flat stages*data_dim period data
};

// Discrete scenario tree over T stages. A scenario follows a root-to-leaf
// path and carries one exogenous vector per period; period_data(s, t) is the
// realization consumed by the stage-t cost of scenario s. Scenarios are kept
// in depth-first order, so the scenarios sharing any stage-t node form a
// contiguous index range and the sibling permutation is a group lookup.
class ScenarioTree {
 public:
  ScenarioTree(int stages, int action_dim, int data_dim,
               std::vector<TreeNode> nodes, std::vector<ScenarioSeed> seeds);

  // Root-branching tree ("two-layer" information structure): the stage-1
  // decision is shared by every scenario, later stages are scenario-private.
  // With stages == 1 all scenarios share the single root node.
  static ScenarioTree two_layer(int n_scenarios, int stages, int action_dim,
                                int data_dim, std::vector<double> probs,
                                std::vector<std::vector<double>> data);

  int num_stages() const { return stages_; }
  int num_scenarios() const { return static_cast<int>(seeds_.size()); }
  int action_dim() const { return action_dim_; }
  int data_dim() const { return data_dim_; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<ScenarioSeed>& seeds() const { return seeds_; }
  // node index on scenario s at stage t (1-based stage)
  int node_at(int s, int t) const;
  // exogenous data of scenario s for period t (1-based)
  std::span<const double> period_data(int s, int t) const;
  double scenario_probability(int s) const;
  // contiguous [first, last] scenario range sharing node_at(s, t)
  std::pair<int, int> stage_group(int s, int t) const;

  void check_scenario(int s) const;
  void check_stage(int t) const;

 private:
  void validate_and_index();

  int stages_ = 0;
  int action_dim_ = 0;
  int data_dim_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<ScenarioSeed> seeds_;       // DFS order
  std::vector<std::vector<int>> paths_;   // per scenario, node per stage
  std::vector<double> q_;                 // scenario probabilities
  std::vector<int> group_first_;          // (t-1)*S + s -> run start
  std::vector<int> group_last_;           // (t-1)*S + s -> run end
};

// q(xi_s): product of the conditional probabilities along the path of
// scenario s (times the within-leaf weight when leaves are shared).
double scenario_probability(const ScenarioTree& tree, int s);

// Last common stage of two scenarios; t_max(s, s) = T.
int t_max(const ScenarioTree& tree, int s1, int s2);

// Sibling permutation nu(s, t): cyclic shift within the group of scenarios
// sharing the stage-t node; a scenario alone in its group is its own sibling.
int sibling(const ScenarioTree& tree, int s, int t);

// Orthogonal projection onto the nonanticipative subspace: per stage-t node,
// replace the actions of all scenarios through that node by their
// probability-weighted average.
PolicyMapping project_nonanticipative(const ScenarioTree& tree,
                                      const PolicyMapping& x);

// max over (s, t) of the max-norm of x_s(t) - x_{nu(s,t)}(t); zero exactly on
// nonanticipative mappings. Stage-T terms vanish on ordinary trees (leaf
// groups are singletons there).
double nonanticipativity_residual(const ScenarioTree& tree,
                                  const PolicyMapping& x);

}  // namespace nph
