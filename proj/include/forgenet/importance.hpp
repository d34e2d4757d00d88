#pragma once

#include <string>
#include <vector>

#include "forgenet/graph_extract.hpp"
#include "forgenet/masked_net.hpp"

namespace forgenet {

// Graph Connection Weights scores over all p original features. Features
// outside the graph vertex set score 0; ranking is score-descending with
// ties broken by ascending feature index.
struct ImportanceReport {
  std::vector<double> scores;  // length p, indexed by original feature
  std::vector<int> ranking;    // permutation of [0, p)
};

// For vertex j the score sums |W_in| over the row masked by outgoing edges,
// |W_in| over the column masked by incoming edges, and |W1| over the row of
// the weights leaving j's hidden neuron. The diagonal weight participates in
// both the outgoing and incoming sums, matching the formula as written.
ImportanceReport gcw_scores(const MaskedNet& net, const FeatureGraph& g, int p);

void save_importance_csv(const std::string& path, const ImportanceReport& report,
                         const std::vector<std::string>& feature_names);

}  // namespace forgenet
