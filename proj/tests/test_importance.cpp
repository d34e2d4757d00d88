#include <doctest.h>

#include "forgenet/importance.hpp"
#include "forgenet/rng.hpp"

using namespace forgenet;

namespace {

// Graph over original features {2, 5} (locally [f1, f2] in the worked
// example), with adjacency [[1,1],[0,1]].
FeatureGraph worked_graph() {
  std::vector<std::pair<VertexSet, EdgeSet>> parts;
  parts.push_back({{2, 5}, {{2, 5}}});
  return merge_graphs(parts);
}

MaskedNet worked_net(const FeatureGraph& g) {
  NetConfig cfg;
  cfg.hidden_dims = {1};
  cfg.dropout_keep = 1.0;
  cfg.seed = 4;
  MaskedNet net = init(g.adjacency, cfg);
  net.weights[0] << 0.5, -0.2, 0.0, 0.4;
  net.weights[1] << 1.0, -2.0;
  return net;
}

}  // namespace

TEST_CASE("gcw_scores reproduces the worked example, diagonal counted twice") {
  const FeatureGraph g = worked_graph();
  const MaskedNet net = worked_net(g);
  const ImportanceReport report = gcw_scores(net, g, 7);

  REQUIRE(report.scores.size() == 7);
  CHECK(report.scores[2] == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(report.scores[5] == doctest::Approx(3.0).epsilon(1e-12));
  for (int j : {0, 1, 3, 4, 6}) CHECK(report.scores[static_cast<std::size_t>(j)] == 0.0);

  // Ranking: f5 (3.0), f2 (2.2), then unscored features by ascending index.
  CHECK(report.ranking == std::vector<int>{5, 2, 0, 1, 3, 4, 6});
}

TEST_CASE("gcw_scores of an all-zero net is all zeros with identity ranking") {
  const FeatureGraph g = worked_graph();
  MaskedNet net = worked_net(g);
  for (auto& w : net.weights) w.setZero();
  const ImportanceReport report = gcw_scores(net, g, 7);
  for (double s : report.scores) CHECK(s == 0.0);
  CHECK(report.ranking == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(gcw_scores(net, g, 4), std::invalid_argument);
}

TEST_CASE("gcw_scores rejects a mask mismatch") {
  const FeatureGraph g = worked_graph();
  MaskedNet net = worked_net(g);
  net.mask(1, 0) = 1.0;
  CHECK_THROWS_AS(gcw_scores(net, g, 7), std::invalid_argument);
}

TEST_CASE("scaling all weight blocks scales scores without reordering") {
  std::vector<std::pair<VertexSet, EdgeSet>> parts;
  parts.push_back({{0, 1, 2, 3}, {{0, 1}, {1, 2}, {3, 0}, {2, 2}}});
  const FeatureGraph g = merge_graphs(parts);
  NetConfig cfg;
  cfg.hidden_dims = {3};
  cfg.seed = 8;
  MaskedNet net = init(g.adjacency, cfg);

  const ImportanceReport base = gcw_scores(net, g, 4);
  MaskedNet scaled = net;
  scaled.weights[0] *= 3.0;
  scaled.weights[1] *= 3.0;
  const ImportanceReport tripled = gcw_scores(scaled, g, 4);

  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(tripled.scores[j] == doctest::Approx(3.0 * base.scores[j]).epsilon(1e-12));
    CHECK(base.scores[j] >= 0.0);
  }
  CHECK(tripled.ranking == base.ranking);
}

TEST_CASE("ranking is always a permutation of all p features") {
  Rng rng(12);
  std::vector<std::pair<VertexSet, EdgeSet>> parts;
  parts.push_back({{1, 4, 6}, {{1, 4}, {6, 1}}});
  const FeatureGraph g = merge_graphs(parts);
  NetConfig cfg;
  cfg.hidden_dims = {2};
  cfg.seed = rng.uniform_int(1000);
  const MaskedNet net = init(g.adjacency, cfg);
  const ImportanceReport report = gcw_scores(net, g, 9);
  std::vector<int> sorted = report.ranking;
  std::sort(sorted.begin(), sorted.end());
  for (int j = 0; j < 9; ++j) CHECK(sorted[static_cast<std::size_t>(j)] == j);
}
