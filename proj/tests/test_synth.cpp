#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <filesystem>

#include "forgenet/synth.hpp"
#include "oracles.hpp"

using namespace forgenet;

TEST_CASE("ba_graph structure at minimal size") {
  const UGraph g = ba_graph(3, 1, 5);
  CHECK(g.n == 3);
  CHECK(g.n_edges() == 2);  // one seed edge, one attachment
  // Node 2 attached to exactly one of {0, 1}.
  CHECK(g.adj[2].size() == 1);
  CHECK_THROWS_AS(ba_graph(2, 2, 1), std::invalid_argument);
}

TEST_CASE("ba_graph edge count follows the construction exactly") {
  for (const auto& [p, m] : std::vector<std::pair<int, int>>{{10, 1}, {50, 2}, {200, 3}}) {
    const UGraph g = ba_graph(p, m, 17);
    CHECK(g.n_edges() == m * (m + 1) / 2 + m * (p - m - 1));
  }
}

TEST_CASE("ba_graph grows heavy-tailed degrees") {
  int heavy_seeds = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const UGraph g = ba_graph(5000, 2, seed);
    std::size_t max_degree = 0;
    for (const auto& nbrs : g.adj) max_degree = std::max(max_degree, nbrs.size());
    if (max_degree >= 20) ++heavy_seeds;
  }
  CHECK(heavy_seeds >= 9);
}

TEST_CASE("er_graph draws exactly the requested number of distinct edges") {
  const UGraph empty = er_graph(6, 0, 1);
  CHECK(empty.n_edges() == 0);

  const UGraph complete = er_graph(6, 15, 1);
  CHECK(complete.n_edges() == 15);
  std::set<std::pair<int, int>> seen(complete.edges.begin(), complete.edges.end());
  CHECK(seen.size() == 15);

  for (long long k : {1LL, 7LL, 33LL}) {
    const UGraph g = er_graph(12, k, 99);
    CHECK(g.n_edges() == k);
    std::set<std::pair<int, int>> distinct(g.edges.begin(), g.edges.end());
    CHECK(static_cast<long long>(distinct.size()) == k);
  }
  CHECK_THROWS_AS(er_graph(4, 7, 1), std::invalid_argument);
}

TEST_CASE("shortest_paths on a chain and against Floyd-Warshall") {
  UGraph chain;
  chain.n = 3;
  chain.adj.resize(3);
  chain.add_edge(0, 1);
  chain.add_edge(1, 2);
  const auto d = shortest_paths(chain);
  CHECK(d(0, 1) == 1);
  CHECK(d(0, 2) == 2);
  CHECK(d(2, 0) == 2);
  for (int i = 0; i < 3; ++i) CHECK(d(i, i) == 0);

  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    UGraph g = ba_graph(40, 2, seed);  // connected by construction
    const auto fast = shortest_paths(g);
    const auto brute = oracles::floyd_warshall(g);
    CHECK(fast == brute);
  }

  UGraph disconnected;
  disconnected.n = 4;
  disconnected.adj.resize(4);
  disconnected.add_edge(0, 1);
  disconnected.add_edge(2, 3);
  CHECK_THROWS_AS(shortest_paths(disconnected), std::runtime_error);
}

TEST_CASE("covariance of the chain matches the worked example exactly") {
  Eigen::MatrixXi d(3, 3);
  d << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  const auto res = covariance(d, 0.6);
  Matrix expected(3, 3);
  expected << 1.0, 0.6, 0.36, 0.6, 1.0, 0.6, 0.36, 0.6, 1.0;
  CHECK(res.sigma == expected);
  CHECK(res.jitter == 0.0);  // AR(1)-structured, Cholesky succeeds

  Eigen::LLT<Matrix> llt(res.sigma);
  CHECK(llt.info() == Eigen::Success);

  Eigen::MatrixXi single(1, 1);
  single << 0;
  const auto one = covariance(single, 0.6);
  CHECK(one.sigma(0, 0) == 1.0);
}

TEST_CASE("covariance entries decay with distance and stay in (0, 1]") {
  const UGraph g = ba_graph(60, 2, 3);
  const auto res = covariance(shortest_paths(g), 0.6);
  CHECK((res.sigma.diagonal().array() == 1.0 + res.jitter).all());
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      if (i == j) continue;
      CHECK(res.sigma(i, j) > 0.0);
      CHECK(res.sigma(i, j) <= 0.6);
    }
  }
}

TEST_CASE("sample_mvn matches the target covariance statistically") {
  const Matrix eye = Matrix::Identity(3, 3);
  const Matrix draws = sample_mvn(eye, 10000, 7);
  for (int j = 0; j < 3; ++j) {
    const double mean = draws.col(j).mean();
    const double var = (draws.col(j).array() - mean).square().sum() / 9999.0;
    CHECK(var > 0.9);
    CHECK(var < 1.1);
  }

  Matrix pair(2, 2);
  pair << 1.0, 0.6, 0.6, 1.0;
  const Matrix corr_draws = sample_mvn(pair, 10000, 8);
  const Vector a = corr_draws.col(0).array() - corr_draws.col(0).mean();
  const Vector b = corr_draws.col(1).array() - corr_draws.col(1).mean();
  const double corr = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
  CHECK(std::abs(corr - 0.6) < 0.05);

  CHECK(sample_mvn(pair, 50, 9) == sample_mvn(pair, 50, 9));
}

TEST_CASE("select_true_predictors on a star graph") {
  UGraph star;
  star.n = 21;
  star.adj.resize(21);
  for (int leaf = 1; leaf <= 20; ++leaf) star.add_edge(0, leaf);

  const auto sel = select_true_predictors(star, 1, 15, 3);
  CHECK(sel.cores == std::vector<int>{0});
  CHECK(sel.true_set.size() == 15);
  CHECK(std::set<int>(sel.true_set.begin(), sel.true_set.end()).size() == 15);
  CHECK(std::find(sel.true_set.begin(), sel.true_set.end(), 0) != sel.true_set.end());

  const auto only_cores = select_true_predictors(star, 1, 1, 4);
  CHECK(only_cores.true_set == only_cores.cores);

  // A star has one hub; asking for two cores with high degree must fail.
  CHECK_THROWS_AS(select_true_predictors(star, 2, 15, 5), std::runtime_error);
}

TEST_CASE("select_true_predictors yields n_cores * per_core distinct features") {
  const UGraph g = ba_graph(400, 3, 11);
  for (int n_cores : {1, 2, 3}) {
    const auto sel = select_true_predictors(g, n_cores, 5, 21);
    CHECK(static_cast<int>(sel.true_set.size()) == n_cores * 5);
    CHECK(std::set<int>(sel.true_set.begin(), sel.true_set.end()).size() ==
          sel.true_set.size());
  }
}

TEST_CASE("generate_outcome reproduces the worked g values") {
  // One feature, beta fixed by construction: choose x so that the linear
  // score is exactly [-1, 0, 1] regardless of the drawn beta.
  Matrix x(3, 1);
  // Recover the drawn (beta, beta0) by generating once on zeros.
  Outcome dummy;
  {
    Matrix zeros = Matrix::Zero(3, 1);
    dummy = generate_outcome(zeros, 0.15, 77);
  }
  const double beta = dummy.beta(0);
  const double beta0 = dummy.beta0;
  REQUIRE(std::abs(beta) > 1e-6);
  for (int i = 0; i < 3; ++i) x(i, 0) = (static_cast<double>(i - 1) - beta0) / beta;

  const Outcome out = generate_outcome(x, 0.15, 77);
  // Scores are [-1, 0, 1]: g = 0.7*phi(tanh) + 0.3*phi(s^2) = [0.3, 0.35, 1].
  // The median is 0.35, so labels are [0, 0, 1].
  CHECK(out.threshold == doctest::Approx(0.35).epsilon(1e-9));
  CHECK(out.y(0) == 0);
  CHECK(out.y(1) == 0);
  CHECK(out.y(2) == 1);
}

TEST_CASE("generate_outcome draws beta within the range and balances classes") {
  Rng rng(5);
  Matrix x(101, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i / 6, i % 6) = rng.normal();
  const Outcome out = generate_outcome(x, 0.15, 12);
  for (Eigen::Index j = 0; j < out.beta.size(); ++j) {
    CHECK(std::abs(out.beta(j)) < 0.15);
  }
  CHECK(std::abs(out.beta0) < 0.15);
  const auto pos = (out.y.array() == 1).count();
  const auto neg = (out.y.array() == 0).count();
  CHECK(std::abs(pos - neg) <= 1);
}

TEST_CASE("relevant_features adds exactly the graph neighbors") {
  UGraph chain;
  chain.n = 3;
  chain.adj.resize(3);
  chain.add_edge(0, 1);
  chain.add_edge(1, 2);
  CHECK(relevant_features(chain, {1}) == std::set<int>{0, 1, 2});
  CHECK(relevant_features(chain, {0}) == std::set<int>{0, 1});

  UGraph star;
  star.n = 6;
  star.adj.resize(6);
  for (int leaf = 1; leaf < 6; ++leaf) star.add_edge(0, leaf);
  CHECK(relevant_features(star, {0}) == std::set<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("generate is reproducible and internally consistent") {
  SynthSpec spec;
  spec.p = 120;
  spec.n = 60;
  spec.p0 = 6;
  spec.n_cores = 2;
  spec.seed = 31;
  const SynthOutput a = generate(spec);
  const SynthOutput b = generate(spec);
  CHECK(a.data.x == b.data.x);
  CHECK(a.data.y == b.data.y);
  CHECK(a.true_predictors == b.true_predictors);
  CHECK(a.relevant == b.relevant);

  CHECK(static_cast<int>(a.true_predictors.size()) == spec.p0);
  const std::set<int> rel(a.relevant.begin(), a.relevant.end());
  for (int t : a.true_predictors) CHECK(rel.count(t) == 1);
  CHECK(static_cast<Eigen::Index>(a.data.feature_names.size()) == a.data.x.cols());

  const auto pos = (a.data.y.array() == 1).count();
  CHECK(std::abs(pos - (spec.n - pos)) <= 1);
}

TEST_CASE("relevant set size at paper scale is the right order of magnitude") {
  SynthSpec spec;
  spec.p = 5000;
  spec.p0 = 15;
  spec.n_cores = 1;
  spec.seed = 2;
  const UGraph g = ba_graph(spec.p, spec.ba_m, 14);
  const auto sel = select_true_predictors(g, spec.n_cores, spec.p0, 15);
  const auto rel = relevant_features(g, sel.true_set);
  CHECK(rel.size() >= 50);
  CHECK(rel.size() <= 2000);
}

TEST_CASE("write_synth produces the documented files") {
  namespace fs = std::filesystem;
  SynthSpec spec;
  spec.p = 30;
  spec.n = 20;
  spec.p0 = 3;
  spec.n_cores = 1;
  spec.seed = 9;
  const SynthOutput out = generate(spec);
  const auto dir = fs::temp_directory_path() / "forgenet_synth_test";
  fs::remove_all(dir);
  write_synth(dir.string(), spec, out);
  for (const char* name : {"features.csv", "labels.csv", "true_graph.edges",
                           "true_predictors.txt", "relevant_features.txt",
                           "manifest.json"}) {
    CHECK(fs::exists(dir / name));
  }
  const Dataset back = load_csv((dir / "features.csv").string(),
                                (dir / "labels.csv").string());
  CHECK(back.x == out.data.x);
  CHECK(back.y == out.data.y);
  fs::remove_all(dir);
}
