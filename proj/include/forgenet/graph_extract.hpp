#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forgenet/data.hpp"
#include "forgenet/forest.hpp"

namespace forgenet {

using VertexSet = std::set<int>;
using EdgeSet = std::set<std::pair<int, int>>;

// Directed graph over a subset of original feature indices. `vertices` is
// sorted ascending and defines the reduced column order; `adjacency` is the
// |V| x |V| binary mask with A(i,j) = 1 iff edge vertices[i] -> vertices[j]
// exists, plus a unit diagonal when built with self_loops on (the default).
struct FeatureGraph {
  std::vector<int> vertices;
  EdgeSet edges;
  Matrix adjacency;

  int size() const { return static_cast<int>(vertices.size()); }
};

// Vertices are the split features of internal nodes; every internal node
// with split feature u and an internal child splitting v contributes the
// edge (u, v). Leaves contribute nothing.
std::pair<VertexSet, EdgeSet> tree_to_graph(const Tree& t);

FeatureGraph merge_graphs(const std::vector<std::pair<VertexSet, EdgeSet>>& parts,
                          bool self_loops = true);

// Union of the per-tree graphs of every tree in the forest.
FeatureGraph extract_graph(const Forest& f, bool self_loops = true);

// Columns of `d` at g.vertices, in vertex order; labels unchanged.
Dataset reduce_dataset(const Dataset& d, const FeatureGraph& g);

void save_edge_list(const std::string& path, const FeatureGraph& g,
                    const std::vector<std::string>& feature_names);
void save_adjacency_csv(const std::string& path, const FeatureGraph& g,
                        const std::vector<std::string>& feature_names);

}  // namespace forgenet
