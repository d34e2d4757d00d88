#include "forgenet/graph_extract.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace forgenet {

std::pair<VertexSet, EdgeSet> tree_to_graph(const Tree& t) {
  VertexSet vertices;
  EdgeSet edges;
  for (const auto& node : t.nodes) {
    if (node.is_leaf()) continue;
    vertices.insert(node.feature);
    for (int child : {node.left, node.right}) {
      const auto& c = t.nodes[static_cast<std::size_t>(child)];
      if (!c.is_leaf()) edges.insert({node.feature, c.feature});
    }
  }
  return {std::move(vertices), std::move(edges)};
}

FeatureGraph merge_graphs(const std::vector<std::pair<VertexSet, EdgeSet>>& parts,
                          bool self_loops) {
  VertexSet vertices;
  FeatureGraph g;
  for (const auto& [v, e] : parts) {
    vertices.insert(v.begin(), v.end());
    g.edges.insert(e.begin(), e.end());
  }
  g.vertices.assign(vertices.begin(), vertices.end());  // set iterates ascending

  std::unordered_map<int, int> local;
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    local[g.vertices[i]] = static_cast<int>(i);
  }
  const auto k = static_cast<Eigen::Index>(g.vertices.size());
  g.adjacency = Matrix::Zero(k, k);
  if (self_loops) g.adjacency.diagonal().setOnes();
  for (const auto& [u, v] : g.edges) {
    g.adjacency(local.at(u), local.at(v)) = 1.0;
  }
  return g;
}

FeatureGraph extract_graph(const Forest& f, bool self_loops) {
  std::vector<std::pair<VertexSet, EdgeSet>> parts;
  parts.reserve(f.trees.size());
  for (const auto& tree : f.trees) parts.push_back(tree_to_graph(tree));
  return merge_graphs(parts, self_loops);
}

Dataset reduce_dataset(const Dataset& d, const FeatureGraph& g) {
  if (g.vertices.empty()) {
    throw std::runtime_error("forest selected no features");
  }
  Dataset out;
  out.y = d.y;
  out.x.resize(d.n(), static_cast<Eigen::Index>(g.vertices.size()));
  out.feature_names.reserve(g.vertices.size());
  for (std::size_t j = 0; j < g.vertices.size(); ++j) {
    const int v = g.vertices[j];
    if (v < 0 || v >= d.p()) {
      throw std::out_of_range("graph vertex " + std::to_string(v) +
                              " outside feature range");
    }
    out.x.col(static_cast<Eigen::Index>(j)) = d.x.col(v);
    out.feature_names.push_back(d.feature_names.empty()
                                    ? "f" + std::to_string(v)
                                    : d.feature_names[static_cast<std::size_t>(v)]);
  }
  return out;
}

void save_edge_list(const std::string& path, const FeatureGraph& g,
                    const std::vector<std::string>& feature_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  auto name = [&feature_names](int v) {
    return feature_names.empty() ? "f" + std::to_string(v)
                                 : feature_names[static_cast<std::size_t>(v)];
  };
  for (const auto& [u, v] : g.edges) {
    out << name(u) << ',' << name(v) << '\n';
  }
}

void save_adjacency_csv(const std::string& path, const FeatureGraph& g,
                        const std::vector<std::string>& feature_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  auto name = [&feature_names](int v) {
    return feature_names.empty() ? "f" + std::to_string(v)
                                 : feature_names[static_cast<std::size_t>(v)];
  };
  for (std::size_t j = 0; j < g.vertices.size(); ++j) {
    out << (j ? "," : "") << name(g.vertices[j]);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < g.adjacency.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.adjacency.cols(); ++j) {
      out << (j ? "," : "") << static_cast<int>(g.adjacency(i, j));
    }
    out << '\n';
  }
}

}  // namespace forgenet
