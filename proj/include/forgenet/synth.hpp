#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forgenet/data.hpp"

namespace forgenet {

// Simple undirected graph over vertices [0, n).
struct UGraph {
  int n = 0;
  std::vector<std::vector<int>> adj;
  std::vector<std::pair<int, int>> edges;  // u < v

  void add_edge(int u, int v);
  int n_edges() const { return static_cast<int>(edges.size()); }
};

// Barabasi-Albert preferential attachment: complete graph on m+1 nodes, then
// each new node attaches m edges to distinct existing nodes with probability
// proportional to current degree.
UGraph ba_graph(int p, int m, std::uint64_t seed);

// Exactly n_edges distinct unordered pairs sampled uniformly.
UGraph er_graph(int p, long long n_edges, std::uint64_t seed);

// All-pairs unweighted shortest-path lengths via per-source BFS. Throws if
// the graph is disconnected.
Eigen::MatrixXi shortest_paths(const UGraph& g);

struct CovarianceResult {
  Matrix sigma;
  double jitter = 0.0;  // lambda added to the diagonal if Cholesky failed
};

// Sigma_ij = base^D_ij. If the matrix is not positive definite, adds
// (|most negative eigenvalue| + 1e-8) I and records the jitter.
CovarianceResult covariance(const Eigen::MatrixXi& dist, double base);

// Rows are i.i.d. draws L z with L the Cholesky factor of sigma.
Matrix sample_mvn(const Matrix& sigma, int n, std::uint64_t seed);

struct CoreSelection {
  std::vector<int> cores;
  std::vector<int> true_set;  // size n_cores * per_core, no duplicates
};

// Hubs are the top 5% of nodes by degree with degree >= per_core - 1. Each
// sampled core contributes itself plus per_core - 1 of its neighbors;
// collisions are resolved by resampling, with a bounded number of attempts.
CoreSelection select_true_predictors(const UGraph& g, int n_cores, int per_core,
                                     std::uint64_t seed);

struct Outcome {
  IntVector y;
  Vector beta;
  double beta0 = 0.0;
  double threshold = 0.0;
};

// g(s) = 0.7 phi(tanh s) + 0.3 phi(s^2), phi the min-max rescale of the
// sample vector to [0,1] (constant vectors map to zeros).
Vector outcome_transform(const Vector& score);

// Linear score through outcome_transform; labels are 1 where g exceeds its
// median.
Outcome generate_outcome(const Matrix& x_true, double beta_range,
                         std::uint64_t seed);

// True set plus all graph neighbors of its members.
std::set<int> relevant_features(const UGraph& g, const std::vector<int>& true_set);

struct SynthSpec {
  int p = 500;
  int n = 400;
  int n_cores = 1;
  int p0 = 15;  // must be divisible by n_cores
  int ba_m = 2;
  double base_corr = 0.6;
  double beta_range = 0.15;
  std::uint64_t seed = 0;
};

struct SynthOutput {
  Dataset data;
  UGraph true_graph;
  std::vector<int> true_predictors;
  std::vector<int> relevant;
  Vector beta;
  double beta0 = 0.0;
  double threshold = 0.0;
  double jitter = 0.0;
};

SynthOutput generate(const SynthSpec& spec);

// Writes features.csv, labels.csv, true_graph.edges, true_predictors.txt,
// relevant_features.txt and manifest.json into `dir`.
void write_synth(const std::string& dir, const SynthSpec& spec,
                 const SynthOutput& out);

}  // namespace forgenet
