#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forgenet/data.hpp"
#include "forgenet/forest.hpp"
#include "forgenet/graph_extract.hpp"
#include "forgenet/importance.hpp"
#include "forgenet/masked_net.hpp"

namespace forgenet {

struct ForestParams {
  ForestKind kind = ForestKind::RF;
  RfParams rf;
  GbmParams gbm;
};

struct PipelineConfig {
  ForestParams forest;
  NetConfig net;
  bool normalize = true;   // Z-score with training statistics before the forest
  bool self_loops = true;  // unit diagonal on the extracted adjacency
};

// Forest feature extractor feeding a graph-masked net. The stored
// normalization comes from training data only and is reapplied at predict
// time; the stored vertex list performs the column reduction internally.
struct ForgeNetModel {
  Forest forest;
  FeatureGraph graph;
  MaskedNet net;
  Normalization norm;
  PipelineConfig config;
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
};

// Trains forest, extracts and merges the per-tree graphs, reduces the input
// to the graph vertices and trains the masked net. The master seed splits
// into forest and net seeds by fixed stream offsets.
ForgeNetModel fit(const Dataset& d_train, const PipelineConfig& cfg,
                  std::uint64_t seed);

// x_test must carry all original feature columns in training order. With
// self_normalize the incoming data is Z-scored by its own statistics instead
// of the stored training statistics (default: training statistics).
Vector predict(const ForgeNetModel& m, const Matrix& x_test,
               bool self_normalize = false);

ImportanceReport feature_importance(const ForgeNetModel& m);

// Reorder `x` columns given by `from_names` into `to_names` order.
Matrix align_columns(const Matrix& x, const std::vector<std::string>& from_names,
                     const std::vector<std::string>& to_names);

// Name-based alignment for prediction. Columns the graph does not use may be
// absent (they are filled with the stored training mean, which normalizes to
// zero and is dropped by the reduction); missing graph columns are an error.
Matrix align_for_predict(const ForgeNetModel& m, const Matrix& x,
                         const std::vector<std::string>& names);

// Bundle directory: forest.json, graph.edges, net.json, norm.csv,
// manifest.json (version "forgenet-v1").
void save_model(const std::string& dir, const ForgeNetModel& m);
ForgeNetModel load_model(const std::string& dir);

}  // namespace forgenet
