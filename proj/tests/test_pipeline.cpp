#include <doctest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "forgenet/metrics.hpp"
#include "forgenet/pipeline.hpp"
#include "forgenet/synth.hpp"

using namespace forgenet;
namespace fs = std::filesystem;

namespace {

// Small synthetic problem with genuine signal.
SynthOutput desk_problem(int p, int n, std::uint64_t seed) {
  SynthSpec spec;
  spec.p = p;
  spec.n = n;
  spec.p0 = 6;
  spec.n_cores = 1;
  spec.seed = seed;
  return generate(spec);
}

PipelineConfig shallow_config() {
  PipelineConfig cfg;
  cfg.forest.rf.n_trees = 50;
  cfg.forest.rf.max_depth = 4;
  cfg.forest.gbm.n_trees = 40;
  cfg.forest.gbm.max_depth = 3;
  cfg.net.hidden_dims = {16, 8};
  cfg.net.epochs = 15;
  return cfg;
}

}  // namespace

TEST_CASE("fit reduces the feature space and matches used_features") {
  const SynthOutput synth = desk_problem(200, 200, 12);
  const ForgeNetModel model = fit(synth.data, shallow_config(), 5);

  CHECK(model.graph.size() < 200);  // shallow forest leaves features unused
  const auto used = used_features(model.forest);
  CHECK(std::vector<int>(used.begin(), used.end()) == model.graph.vertices);
  CHECK(model.net.mask.rows() == model.graph.size());
}

TEST_CASE("fit is deterministic under the master seed") {
  const SynthOutput synth = desk_problem(80, 90, 3);
  const ForgeNetModel a = fit(synth.data, shallow_config(), 77);
  const ForgeNetModel b = fit(synth.data, shallow_config(), 77);
  CHECK(forest_to_json(a.forest).dump() == forest_to_json(b.forest).dump());
  CHECK(net_to_json(a.net).dump() == net_to_json(b.net).dump());
  CHECK(a.graph.vertices == b.graph.vertices);
}

TEST_CASE("predict applies stored normalization and reduction") {
  const SynthOutput synth = desk_problem(100, 120, 21);
  const SplitPair split = stratified_split(synth.data, 0.25, 9);
  const ForgeNetModel model = fit(split.train, shallow_config(), 31);

  const Vector on_train = predict(model, split.train.x);
  CHECK((on_train.array() >= 0.0).all());
  CHECK((on_train.array() <= 1.0).all());

  const Vector probs = predict(model, split.test.x);
  CHECK(probs.size() == split.test.n());

  Matrix wrong(3, 7);
  CHECK_THROWS_AS(predict(model, wrong), std::invalid_argument);
}

TEST_CASE("column permutation with name remapping leaves predictions unchanged") {
  const SynthOutput synth = desk_problem(60, 80, 41);
  const ForgeNetModel model = fit(synth.data, shallow_config(), 51);
  const Vector base = predict(model, synth.data.x);

  // Reverse the columns, then realign by name.
  Matrix reversed = synth.data.x.rowwise().reverse();
  std::vector<std::string> reversed_names(synth.data.feature_names.rbegin(),
                                          synth.data.feature_names.rend());
  const Matrix realigned = align_columns(reversed, reversed_names,
                                         model.feature_names);
  CHECK(realigned == synth.data.x);
  CHECK(predict(model, realigned) == base);

  CHECK_THROWS_AS(align_columns(reversed, reversed_names, {"missing"}),
                  std::invalid_argument);
}

TEST_CASE("dropping a column the graph does not use leaves predictions unchanged") {
  const SynthOutput synth = desk_problem(60, 80, 43);
  const ForgeNetModel model = fit(synth.data, shallow_config(), 53);
  const Vector base = predict(model, synth.data.x);

  // Pick a feature outside the graph and remove its column.
  std::set<int> vertices(model.graph.vertices.begin(), model.graph.vertices.end());
  int dropped = -1;
  for (int j = 0; j < 60; ++j) {
    if (!vertices.count(j)) {
      dropped = j;
      break;
    }
  }
  REQUIRE(dropped >= 0);

  Matrix without(synth.data.x.rows(), 59);
  std::vector<std::string> names;
  Eigen::Index col = 0;
  for (int j = 0; j < 60; ++j) {
    if (j == dropped) continue;
    without.col(col++) = synth.data.x.col(j);
    names.push_back(synth.data.feature_names[static_cast<std::size_t>(j)]);
  }
  const Matrix aligned = align_for_predict(model, without, names);
  CHECK(predict(model, aligned) == base);

  // Dropping a graph vertex is an error.
  const int vertex = model.graph.vertices.front();
  Matrix without_vertex(synth.data.x.rows(), 59);
  std::vector<std::string> names2;
  col = 0;
  for (int j = 0; j < 60; ++j) {
    if (j == vertex) continue;
    without_vertex.col(col++) = synth.data.x.col(j);
    names2.push_back(synth.data.feature_names[static_cast<std::size_t>(j)]);
  }
  CHECK_THROWS_AS(align_for_predict(model, without_vertex, names2),
                  std::invalid_argument);
}

TEST_CASE("self-normalized prediction mode uses the incoming statistics") {
  const SynthOutput synth = desk_problem(50, 70, 47);
  const ForgeNetModel model = fit(synth.data, shallow_config(), 57);

  // On the training data itself the two modes agree (same statistics).
  const Vector stored = predict(model, synth.data.x, false);
  const Vector self = predict(model, synth.data.x, true);
  CHECK((stored - self).cwiseAbs().maxCoeff() < 1e-12);

  // On shifted data they differ: the self mode removes the shift.
  Matrix shifted = synth.data.x;
  shifted.array() += 5.0;
  const Vector self_shifted = predict(model, shifted, true);
  CHECK((self_shifted - self).cwiseAbs().maxCoeff() < 1e-12);
  const Vector stored_shifted = predict(model, shifted, false);
  CHECK((stored_shifted - stored).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("feature_importance delegates to gcw_scores over all p features") {
  const SynthOutput synth = desk_problem(70, 80, 61);
  const ForgeNetModel model = fit(synth.data, shallow_config(), 71);
  const ImportanceReport report = feature_importance(model);
  CHECK(report.scores.size() == 70);
  CHECK(report.ranking.size() == 70);

  const ImportanceReport direct = gcw_scores(model.net, model.graph, 70);
  CHECK(report.scores == direct.scores);
  CHECK(report.ranking == direct.ranking);

  // Features the forest never used score exactly zero.
  std::set<int> vertices(model.graph.vertices.begin(), model.graph.vertices.end());
  for (int j = 0; j < 70; ++j) {
    if (!vertices.count(j)) CHECK(report.scores[static_cast<std::size_t>(j)] == 0.0);
  }
}

TEST_CASE("fit-then-predict beats chance by 3 SE over 10 replicates") {
  std::vector<double> aucs;
  for (int r = 0; r < 10; ++r) {
    const SynthOutput synth = desk_problem(100, 160, 900 + r);
    const SplitPair split = stratified_split(synth.data, 0.25, 800 + r);
    PipelineConfig cfg = shallow_config();
    cfg.net.epochs = 25;
    const ForgeNetModel model = fit(split.train, cfg, 700 + r);
    aucs.push_back(roc_auc(predict(model, split.test.x), split.test.y));
  }
  double mean = 0.0;
  for (double a : aucs) mean += a;
  mean /= static_cast<double>(aucs.size());
  double ss = 0.0;
  for (double a : aucs) ss += (a - mean) * (a - mean);
  const double se = std::sqrt(ss / (aucs.size() - 1.0)) / std::sqrt(10.0);
  CHECK(mean > 0.5 + 3.0 * se);
}

TEST_CASE("model bundle save/load round-trips predictions exactly") {
  const SynthOutput synth = desk_problem(50, 70, 81);
  PipelineConfig cfg = shallow_config();
  cfg.forest.kind = ForestKind::GBM;
  const ForgeNetModel model = fit(synth.data, cfg, 91);

  const auto dir = fs::temp_directory_path() / "forgenet_bundle_test";
  fs::remove_all(dir);
  save_model(dir.string(), model);
  for (const char* name :
       {"forest.json", "graph.edges", "net.json", "norm.csv", "manifest.json"}) {
    CHECK(fs::exists(dir / name));
  }

  const ForgeNetModel back = load_model(dir.string());
  CHECK(back.graph.vertices == model.graph.vertices);
  CHECK(back.graph.adjacency == model.graph.adjacency);
  CHECK(back.feature_names == model.feature_names);
  CHECK(back.norm.mean == model.norm.mean);
  CHECK(back.norm.sd == model.norm.sd);
  CHECK(predict(back, synth.data.x) == predict(model, synth.data.x));

  const ImportanceReport a = feature_importance(model);
  const ImportanceReport b = feature_importance(back);
  CHECK(a.scores == b.scores);
  fs::remove_all(dir);
}

TEST_CASE("fit surfaces the empty-graph contract") {
  // Single-class labels make every tree a pure leaf, so no feature is used.
  Dataset d;
  d.x.resize(10, 4);
  d.x.setRandom();
  d.y = IntVector::Ones(10);
  d.feature_names = {"a", "b", "c", "d"};
  CHECK_THROWS_WITH_AS(fit(d, shallow_config(), 1), "forest selected no features",
                       std::runtime_error);
}
