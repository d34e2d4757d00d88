#include <doctest.h>

#include <cmath>

#include "forgenet/metrics.hpp"
#include "forgenet/rng.hpp"
#include "oracles.hpp"

using namespace forgenet;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

IntVector ivec(std::initializer_list<int> v) {
  IntVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (int x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("roc_auc on the worked four-sample example") {
  // positives {0.9, 0.4} vs negatives {0.8, 0.2}: 3 wins of 4 pairs.
  CHECK(roc_auc(vec({0.9, 0.8, 0.4, 0.2}), ivec({1, 0, 1, 0})) ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("roc_auc endpoints") {
  CHECK(roc_auc(vec({0.9, 0.8, 0.3, 0.1}), ivec({1, 1, 0, 0})) == 1.0);
  CHECK(roc_auc(vec({0.5, 0.5, 0.5, 0.5}), ivec({1, 0, 1, 0})) == 0.5);
  CHECK_THROWS_AS(roc_auc(vec({0.5, 0.2}), ivec({1, 1})), std::invalid_argument);
}

TEST_CASE("roc_auc equals brute-force pairwise counting with ties") {
  Rng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(199));
    Vector scores(n);
    IntVector labels(n);
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // Coarse grid forces frequent ties.
      scores(i) = static_cast<double>(rng.uniform_int(8)) / 7.0;
      labels(i) = rng.uniform() < 0.4 ? 1 : 0;
      (labels(i) ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels(0) = 1;
    if (!has_neg) labels(n - 1) = 0;
    const double fast = roc_auc(scores, labels);
    const double brute = oracles::brute_force_roc_auc(scores, labels);
    CHECK(std::abs(fast - brute) <= 1e-12);
  }
}

TEST_CASE("roc_auc complements under score negation without ties") {
  Rng rng(17);
  const int n = 50;
  Vector scores(n);
  IntVector labels(n);
  for (int i = 0; i < n; ++i) {
    scores(i) = rng.normal();
    labels(i) = i % 3 == 0 ? 1 : 0;
  }
  CHECK(roc_auc(scores, labels) + roc_auc(-scores, labels) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pr_curve on the worked example") {
  const auto curve = pr_curve(vec({0.9, 0.8, 0.7, 0.6}), ivec({1, 0, 0, 1}));
  REQUIRE(curve.size() == 4);
  CHECK(curve[0].recall == doctest::Approx(0.5));
  CHECK(curve[0].precision == doctest::Approx(1.0));
  CHECK(curve[1].recall == doctest::Approx(0.5));
  CHECK(curve[1].precision == doctest::Approx(0.5));
  CHECK(curve[2].recall == doctest::Approx(0.5));
  CHECK(curve[2].precision == doctest::Approx(1.0 / 3.0));
  CHECK(curve[3].recall == doctest::Approx(1.0));
  CHECK(curve[3].precision == doctest::Approx(0.5));
}

TEST_CASE("pr_curve groups ties and handles singletons") {
  const auto tied = pr_curve(vec({0.5, 0.5, 0.5}), ivec({1, 0, 1}));
  REQUIRE(tied.size() == 1);
  CHECK(tied[0].recall == doctest::Approx(1.0));
  CHECK(tied[0].precision == doctest::Approx(2.0 / 3.0));

  const auto single = pr_curve(vec({0.3}), ivec({1}));
  REQUIRE(single.size() == 1);
  CHECK(single[0].recall == 1.0);
  CHECK(single[0].precision == 1.0);

  CHECK_THROWS_AS(pr_curve(vec({0.3}), ivec({0})), std::invalid_argument);
}

TEST_CASE("pr_auc worked values") {
  CHECK(pr_auc(vec({0.9, 0.8, 0.7, 0.6}), ivec({1, 0, 0, 1})) ==
        doctest::Approx(0.75).epsilon(1e-12));
  CHECK(pr_auc(vec({0.9, 0.8, 0.3, 0.1}), ivec({1, 1, 0, 0})) == 1.0);
  // All positives: precision 1 everywhere regardless of scores.
  CHECK(pr_auc(vec({0.2, 0.9, 0.4}), ivec({1, 1, 1})) == 1.0);
}

TEST_CASE("pr_auc improves when a misranked adjacent pair is fixed") {
  const double worse = pr_auc(vec({0.9, 0.8, 0.7, 0.6}), ivec({1, 0, 1, 0}));
  const double better = pr_auc(vec({0.9, 0.8, 0.7, 0.6}), ivec({1, 1, 0, 0}));
  CHECK(better > worse);
  // Lower bound: positives/n for the random-like worst orderings.
  CHECK(worse >= 0.5);
}

TEST_CASE("recall_at_precision worked values") {
  const auto scores = vec({0.9, 0.8, 0.7, 0.6});
  const auto labels = ivec({1, 0, 0, 1});
  CHECK(recall_at_precision(scores, labels, 0.5) == doctest::Approx(1.0));
  CHECK(recall_at_precision(vec({0.9, 0.8}), ivec({1, 0}), 1.0) == doctest::Approx(1.0));
  CHECK(recall_at_precision(scores, labels, 1.1) == 0.0);
}

TEST_CASE("set_precision_recall worked values") {
  CHECK(set_precision_recall({3, 4}, {3, 4}, 10) ==
        std::pair<double, double>{1.0, 1.0});
  CHECK(set_precision_recall({}, {3, 4}, 10) == std::pair<double, double>{0.0, 0.0});
  const auto [prec, rec] = set_precision_recall({1, 2, 3, 4}, {3, 4, 5, 6, 7, 8}, 10);
  CHECK(prec == doctest::Approx(0.5));
  CHECK(rec == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(set_precision_recall({1}, {}, 10), std::invalid_argument);
}

TEST_CASE("metrics are invariant under strictly monotone score transforms") {
  Rng rng(909);
  const int n = 60;
  Vector scores(n);
  IntVector labels(n);
  for (int i = 0; i < n; ++i) {
    scores(i) = rng.uniform(-2.0, 2.0);
    labels(i) = rng.uniform() < 0.3 ? 1 : 0;
  }
  labels(0) = 1;
  labels(1) = 0;
  Vector warped(n);
  for (int i = 0; i < n; ++i) warped(i) = std::exp(0.7 * scores(i)) + 3.0;
  CHECK(roc_auc(scores, labels) == doctest::Approx(roc_auc(warped, labels)).epsilon(1e-12));
  CHECK(pr_auc(scores, labels) == doctest::Approx(pr_auc(warped, labels)).epsilon(1e-12));
  CHECK(recall_at_precision(scores, labels, 0.4) ==
        doctest::Approx(recall_at_precision(warped, labels, 0.4)));
}
