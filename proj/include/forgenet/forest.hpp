#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forgenet/data.hpp"

namespace forgenet {

// Binary tree node. Internal nodes carry a split (feature, threshold) and
// two children; leaves carry a value: class-1 probability for RF trees,
// additive raw score for GBM trees. Rows with x(feature) < threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

enum class ForestKind { RF, GBM };

struct Forest {
  ForestKind kind = ForestKind::RF;
  std::vector<Tree> trees;
  int n_features = 0;
  double learning_rate = 0.0;  // GBM only
  double base_score = 0.0;     // GBM only, initial log-odds

  int n_trees() const { return static_cast<int>(trees.size()); }
};

struct RfParams {
  int n_trees = 1000;
  int mtry = 0;        // 0 selects floor(sqrt(p))
  int max_depth = -1;  // negative means unlimited
  int min_leaf = 1;
};

struct GbmParams {
  int n_trees = 1000;
  double learning_rate = 0.1;
  int max_depth = 5;
  double subsample = 1.0;
};

// Random forest of Gini-split classification trees, one bootstrap resample
// per tree, mtry features sampled without replacement at each node.
// Per-tree seeds derive from `seed` by stream index, so the result does not
// depend on training order.
Forest train_rf(const Dataset& d, const RfParams& params, std::uint64_t seed);

// Gradient boosting with logistic loss: each iteration fits a
// variance-reduction regression tree to the residual y - sigmoid(F), with
// one-Newton-step leaf values (sum residual / sum hessian).
Forest train_gbm(const Dataset& d, const GbmParams& params, std::uint64_t seed);

// Class-1 probabilities. RF: mean of per-tree leaf probabilities.
// GBM: sigmoid(base_score + learning_rate * sum of tree outputs).
Vector predict_proba(const Forest& f, const Matrix& x);

// Exactly the split features over all internal nodes of all trees.
std::set<int> used_features(const Forest& f);

nlohmann::json forest_to_json(const Forest& f);
Forest forest_from_json(const nlohmann::json& j);
void save_forest(const Forest& f, const std::string& path);
Forest load_forest(const std::string& path);

}  // namespace forgenet
