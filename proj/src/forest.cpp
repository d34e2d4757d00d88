#include "forgenet/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "forgenet/rng.hpp"

namespace forgenet {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Sorted slot lists, one per feature, shared by both tree builders.
// A "slot" indexes into row_of (bootstrap resamples repeat rows, so several
// slots may map to one row). Each list holds the node's slots in ascending
// order of the feature value; child nodes are produced by stable in-place
// partition of the segment [lo, hi), which keeps every list sorted.
struct SlotLists {
  std::vector<std::vector<int>> per_feature;
  std::vector<int> row_of;

  int n_slots() const { return static_cast<int>(row_of.size()); }
};

// Ascending value order per column, ties broken by row index.
std::vector<std::vector<int>> argsort_columns(const Matrix& x) {
  const auto n = static_cast<int>(x.rows());
  const auto p = static_cast<int>(x.cols());
  std::vector<std::vector<int>> order(static_cast<std::size_t>(p));
  for (int f = 0; f < p; ++f) {
    auto& ord = order[static_cast<std::size_t>(f)];
    ord.resize(static_cast<std::size_t>(n));
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&x, f](int a, int b) {
      const double va = x(a, f), vb = x(b, f);
      return va < vb || (va == vb && a < b);
    });
  }
  return order;
}

// Expand the master per-column order into slot lists for a multiset of rows
// given by per-row counts. Result lists stay value-sorted.
SlotLists expand_lists(const std::vector<std::vector<int>>& master,
                       const std::vector<int>& row_count) {
  SlotLists lists;
  const auto n = static_cast<int>(row_count.size());
  std::vector<int> slot_start(static_cast<std::size_t>(n), 0);
  int total = 0;
  for (int r = 0; r < n; ++r) {
    slot_start[static_cast<std::size_t>(r)] = total;
    total += row_count[static_cast<std::size_t>(r)];
  }
  lists.row_of.resize(static_cast<std::size_t>(total));
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < row_count[static_cast<std::size_t>(r)]; ++k) {
      lists.row_of[static_cast<std::size_t>(slot_start[static_cast<std::size_t>(r)] + k)] = r;
    }
  }
  lists.per_feature.resize(master.size());
  for (std::size_t f = 0; f < master.size(); ++f) {
    auto& dst = lists.per_feature[f];
    dst.reserve(static_cast<std::size_t>(total));
    for (int r : master[f]) {
      for (int k = 0; k < row_count[static_cast<std::size_t>(r)]; ++k) {
        dst.push_back(slot_start[static_cast<std::size_t>(r)] + k);
      }
    }
  }
  return lists;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double key = 0.0;  // minimized
};

// Lexicographic (key, feature, threshold) minimum for reproducible ties.
void consider(SplitChoice& best, double key, int feature, double threshold) {
  if (!best.found || key < best.key ||
      (key == best.key &&
       (feature < best.feature ||
        (feature == best.feature && threshold < best.threshold)))) {
    best.found = true;
    best.key = key;
    best.feature = feature;
    best.threshold = threshold;
  }
}

// Midpoint between adjacent distinct values; nudged up if rounding lands on
// the lower value, so a `x < threshold` partition is never empty.
double midpoint(double lo, double hi) {
  const double mid = (lo + hi) / 2.0;
  return mid > lo ? mid : hi;
}

class RfTreeBuilder {
 public:
  RfTreeBuilder(const Matrix& x, const std::vector<int>& y, SlotLists lists,
                const RfParams& params, Rng& rng)
      : x_(x), y_(y), lists_(std::move(lists)), params_(params), rng_(rng) {}

  Tree build() {
    Tree tree;
    grow(tree, 0, lists_.n_slots(), 0);
    return tree;
  }

 private:
  int grow(Tree& tree, int lo, int hi, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    const int n_node = hi - lo;
    int n_pos = 0;
    for (int i = lo; i < hi; ++i) {
      n_pos += y_[static_cast<std::size_t>(
          lists_.row_of[static_cast<std::size_t>(lists_.per_feature[0][static_cast<std::size_t>(i)])])];
    }

    const bool pure = (n_pos == 0 || n_pos == n_node);
    const bool depth_capped = params_.max_depth >= 0 && depth >= params_.max_depth;
    SplitChoice best;
    if (!pure && !depth_capped && n_node >= 2 * params_.min_leaf) {
      best = find_split(lo, hi, n_node, n_pos);
    }
    if (!best.found) {
      tree.nodes[static_cast<std::size_t>(node_id)].leaf_value =
          static_cast<double>(n_pos) / static_cast<double>(n_node);
      return node_id;
    }

    const int mid = partition(lo, hi, best.feature, best.threshold);
    tree.nodes[static_cast<std::size_t>(node_id)].feature = best.feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = best.threshold;
    const int left = grow(tree, lo, mid, depth + 1);
    const int right = grow(tree, mid, hi, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }

  // Weighted Gini impurity, unnormalized by the node size.
  SplitChoice find_split(int lo, int hi, int n_node, int n_pos) {
    SplitChoice best;
    const auto p = static_cast<int>(lists_.per_feature.size());
    const auto candidates = rng_.sample_without_replacement(p, params_.mtry);
    for (int f : candidates) {
      const auto& list = lists_.per_feature[static_cast<std::size_t>(f)];
      int left_n = 0, left_pos = 0;
      for (int i = lo; i < hi - 1; ++i) {
        const int row = lists_.row_of[static_cast<std::size_t>(list[static_cast<std::size_t>(i)])];
        left_n += 1;
        left_pos += y_[static_cast<std::size_t>(row)];
        const double v = x_(row, f);
        const double v_next =
            x_(lists_.row_of[static_cast<std::size_t>(list[static_cast<std::size_t>(i + 1)])], f);
        if (v == v_next) continue;
        const int right_n = n_node - left_n;
        if (left_n < params_.min_leaf || right_n < params_.min_leaf) continue;
        const double ql = static_cast<double>(left_pos) / left_n;
        const double qr = static_cast<double>(n_pos - left_pos) / right_n;
        const double key = left_n * (2.0 * ql * (1.0 - ql)) + right_n * (2.0 * qr * (1.0 - qr));
        consider(best, key, f, midpoint(v, v_next));
      }
    }
    return best;
  }

  int partition(int lo, int hi, int feature, double threshold) {
    scratch_.clear();
    int mid = lo;
    for (auto& list : lists_.per_feature) {
      scratch_.clear();
      int write = lo;
      for (int i = lo; i < hi; ++i) {
        const int slot = list[static_cast<std::size_t>(i)];
        if (x_(lists_.row_of[static_cast<std::size_t>(slot)], feature) < threshold) {
          list[static_cast<std::size_t>(write++)] = slot;
        } else {
          scratch_.push_back(slot);
        }
      }
      std::copy(scratch_.begin(), scratch_.end(), list.begin() + write);
      mid = write;
    }
    return mid;
  }

  const Matrix& x_;
  const std::vector<int>& y_;
  SlotLists lists_;
  const RfParams& params_;
  Rng& rng_;
  std::vector<int> scratch_;
};

class GbmTreeBuilder {
 public:
  GbmTreeBuilder(const Matrix& x, const std::vector<double>& residual,
                 const std::vector<double>& hessian, SlotLists lists, int max_depth)
      : x_(x), residual_(residual), hessian_(hessian), lists_(std::move(lists)),
        max_depth_(max_depth) {}

  Tree build() {
    Tree tree;
    grow(tree, 0, lists_.n_slots(), 0);
    return tree;
  }

 private:
  int grow(Tree& tree, int lo, int hi, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    const int n_node = hi - lo;
    double sum_r = 0.0, sum_h = 0.0;
    for (int i = lo; i < hi; ++i) {
      const int row = lists_.row_of[static_cast<std::size_t>(
          lists_.per_feature[0][static_cast<std::size_t>(i)])];
      sum_r += residual_[static_cast<std::size_t>(row)];
      sum_h += hessian_[static_cast<std::size_t>(row)];
    }

    SplitChoice best;
    if ((max_depth_ < 0 || depth < max_depth_) && n_node >= 2) {
      best = find_split(lo, hi, n_node, sum_r);
    }
    if (!best.found) {
      tree.nodes[static_cast<std::size_t>(node_id)].leaf_value =
          sum_h > 1e-12 ? sum_r / sum_h : 0.0;
      return node_id;
    }

    const int mid = partition(lo, hi, best.feature, best.threshold);
    tree.nodes[static_cast<std::size_t>(node_id)].feature = best.feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = best.threshold;
    const int left = grow(tree, lo, mid, depth + 1);
    const int right = grow(tree, mid, hi, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }

  // Maximizes sum_L^2/n_L + sum_R^2/n_R, i.e. squared-error reduction on the
  // residuals; stored negated so SplitChoice minimizes.
  SplitChoice find_split(int lo, int hi, int n_node, double sum_total) {
    SplitChoice best;
    const double parent_score =
        sum_total * sum_total / static_cast<double>(n_node);
    const double min_gain = 1e-12 * std::max(1.0, std::abs(parent_score));
    const auto p = static_cast<int>(lists_.per_feature.size());
    for (int f = 0; f < p; ++f) {
      const auto& list = lists_.per_feature[static_cast<std::size_t>(f)];
      double left_sum = 0.0;
      int left_n = 0;
      for (int i = lo; i < hi - 1; ++i) {
        const int row = lists_.row_of[static_cast<std::size_t>(list[static_cast<std::size_t>(i)])];
        left_sum += residual_[static_cast<std::size_t>(row)];
        left_n += 1;
        const double v = x_(row, f);
        const double v_next =
            x_(lists_.row_of[static_cast<std::size_t>(list[static_cast<std::size_t>(i + 1)])], f);
        if (v == v_next) continue;
        const int right_n = n_node - left_n;
        const double right_sum = sum_total - left_sum;
        const double score = left_sum * left_sum / left_n + right_sum * right_sum / right_n;
        if (score - parent_score <= min_gain) continue;
        consider(best, -score, f, midpoint(v, v_next));
      }
    }
    return best;
  }

  int partition(int lo, int hi, int feature, double threshold) {
    int mid = lo;
    for (auto& list : lists_.per_feature) {
      scratch_.clear();
      int write = lo;
      for (int i = lo; i < hi; ++i) {
        const int slot = list[static_cast<std::size_t>(i)];
        if (x_(lists_.row_of[static_cast<std::size_t>(slot)], feature) < threshold) {
          list[static_cast<std::size_t>(write++)] = slot;
        } else {
          scratch_.push_back(slot);
        }
      }
      std::copy(scratch_.begin(), scratch_.end(), list.begin() + write);
      mid = write;
    }
    return mid;
  }

  const Matrix& x_;
  const std::vector<double>& residual_;
  const std::vector<double>& hessian_;
  SlotLists lists_;
  int max_depth_;
  std::vector<int> scratch_;
};

double predict_tree(const Tree& tree, const Matrix& x, Eigen::Index row) {
  int node = 0;
  while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = x(row, nd.feature) < nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].leaf_value;
}

}  // namespace

Forest train_rf(const Dataset& d, const RfParams& params, std::uint64_t seed) {
  const auto n = static_cast<int>(d.n());
  const auto p = static_cast<int>(d.p());
  if (n < 2 || p < 1) throw std::invalid_argument("train_rf needs n >= 2 and p >= 1");
  RfParams eff = params;
  if (eff.mtry == 0) eff.mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(p))));
  if (eff.mtry > p) throw std::invalid_argument("mtry exceeds feature count");
  if (eff.n_trees < 1) throw std::invalid_argument("n_trees must be positive");

  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = d.y(i);

  const auto master = argsort_columns(d.x);

  Forest f;
  f.kind = ForestKind::RF;
  f.n_features = p;
  f.trees.resize(static_cast<std::size_t>(eff.n_trees));
  for (int m = 0; m < eff.n_trees; ++m) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
    std::vector<int> row_count(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      row_count[rng.uniform_int(static_cast<std::uint64_t>(n))] += 1;
    }
    RfTreeBuilder builder(d.x, y, expand_lists(master, row_count), eff, rng);
    f.trees[static_cast<std::size_t>(m)] = builder.build();
  }
  return f;
}

Forest train_gbm(const Dataset& d, const GbmParams& params, std::uint64_t seed) {
  const auto n = static_cast<int>(d.n());
  const auto p = static_cast<int>(d.p());
  if (n < 1 || p < 1) throw std::invalid_argument("train_gbm needs data");
  if (params.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (params.subsample <= 0.0 || params.subsample > 1.0) {
    throw std::invalid_argument("subsample must lie in (0, 1]");
  }
  const auto n_pos = static_cast<int>((d.y.array() == 1).count());
  if (n_pos == 0 || n_pos == n) throw std::invalid_argument("train_gbm needs both classes");

  const double pos_rate = static_cast<double>(n_pos) / n;
  Forest f;
  f.kind = ForestKind::GBM;
  f.n_features = p;
  f.learning_rate = params.learning_rate;
  f.base_score = std::log(pos_rate / (1.0 - pos_rate));

  const auto master = argsort_columns(d.x);
  std::vector<double> score(static_cast<std::size_t>(n), f.base_score);
  std::vector<double> residual(static_cast<std::size_t>(n));
  std::vector<double> hessian(static_cast<std::size_t>(n));

  const int k_sub = std::max(1, static_cast<int>(std::llround(params.subsample * n)));

  for (int m = 0; m < params.n_trees; ++m) {
    for (int i = 0; i < n; ++i) {
      const double q = sigmoid(score[static_cast<std::size_t>(i)]);
      residual[static_cast<std::size_t>(i)] = d.y(i) - q;
      hessian[static_cast<std::size_t>(i)] = q * (1.0 - q);
    }

    std::vector<int> row_count(static_cast<std::size_t>(n), 1);
    if (k_sub < n) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
      std::fill(row_count.begin(), row_count.end(), 0);
      for (int r : rng.sample_without_replacement(n, k_sub)) {
        row_count[static_cast<std::size_t>(r)] = 1;
      }
    }

    GbmTreeBuilder builder(d.x, residual, hessian, expand_lists(master, row_count),
                           params.max_depth);
    Tree tree = builder.build();
    for (int i = 0; i < n; ++i) {
      score[static_cast<std::size_t>(i)] +=
          params.learning_rate * predict_tree(tree, d.x, i);
    }
    f.trees.push_back(std::move(tree));
  }
  return f;
}

Vector predict_proba(const Forest& f, const Matrix& x) {
  if (static_cast<int>(x.cols()) != f.n_features) {
    throw std::invalid_argument("feature count mismatch: expected " +
                                std::to_string(f.n_features) + ", got " +
                                std::to_string(x.cols()));
  }
  Vector out(x.rows());
  if (f.kind == ForestKind::RF) {
    if (f.trees.empty()) throw std::invalid_argument("RF forest has no trees");
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double acc = 0.0;
      for (const auto& tree : f.trees) acc += predict_tree(tree, x, i);
      out(i) = acc / static_cast<double>(f.trees.size());
    }
  } else {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double acc = f.base_score;
      for (const auto& tree : f.trees) {
        acc += f.learning_rate * predict_tree(tree, x, i);
      }
      out(i) = sigmoid(acc);
    }
  }
  return out;
}

std::set<int> used_features(const Forest& f) {
  std::set<int> features;
  for (const auto& tree : f.trees) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) features.insert(node.feature);
    }
  }
  return features;
}

nlohmann::json forest_to_json(const Forest& f) {
  nlohmann::json j;
  j["kind"] = f.kind == ForestKind::RF ? "rf" : "gbm";
  j["n_features"] = f.n_features;
  j["learning_rate"] = f.learning_rate;
  j["base_score"] = f.base_score;
  auto& trees = j["trees"] = nlohmann::json::array();
  for (const auto& tree : f.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : tree.nodes) {
      nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.leaf_value});
    }
    trees.push_back(std::move(nodes));
  }
  return j;
}

Forest forest_from_json(const nlohmann::json& j) {
  Forest f;
  f.kind = j.at("kind").get<std::string>() == "rf" ? ForestKind::RF : ForestKind::GBM;
  f.n_features = j.at("n_features").get<int>();
  f.learning_rate = j.at("learning_rate").get<double>();
  f.base_score = j.at("base_score").get<double>();
  for (const auto& nodes : j.at("trees")) {
    Tree tree;
    for (const auto& nd : nodes) {
      TreeNode node;
      node.feature = nd.at(0).get<int>();
      node.threshold = nd.at(1).get<double>();
      node.left = nd.at(2).get<int>();
      node.right = nd.at(3).get<int>();
      node.leaf_value = nd.at(4).get<double>();
      tree.nodes.push_back(node);
    }
    f.trees.push_back(std::move(tree));
  }
  return f;
}

void save_forest(const Forest& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << forest_to_json(f).dump() << '\n';
}

Forest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j;
  in >> j;
  return forest_from_json(j);
}

}  // namespace forgenet
