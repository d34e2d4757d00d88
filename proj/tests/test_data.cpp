#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "forgenet/data.hpp"
#include "forgenet/rng.hpp"

using namespace forgenet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("forgenet_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

Dataset small_dataset(int n, int p, std::uint64_t seed) {
  Dataset d;
  Rng rng(seed);
  d.x.resize(n, p);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.normal();
    d.y(i) = i % 2;
  }
  for (int j = 0; j < p; ++j) d.feature_names.push_back("f" + std::to_string(j));
  return d;
}

}  // namespace

TEST_CASE("load_csv parses a 2x2 file") {
  TempDir tmp;
  write_file(tmp.file("x.csv"), "a,b\n1.0,2.0\n3.0,4.0\n");
  write_file(tmp.file("y.csv"), "0\n1\n");
  const Dataset d = load_csv(tmp.file("x.csv"), tmp.file("y.csv"));
  CHECK(d.n() == 2);
  CHECK(d.p() == 2);
  CHECK(d.x(0, 0) == 1.0);
  CHECK(d.x(1, 1) == 4.0);
  CHECK(d.y(0) == 0);
  CHECK(d.y(1) == 1);
  CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("load_csv rejects label/feature row mismatch") {
  TempDir tmp;
  write_file(tmp.file("x.csv"), "a,b\n1,2\n3,4\n");
  write_file(tmp.file("y.csv"), "0\n1\n0\n");
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("x.csv"), tmp.file("y.csv")),
                       doctest::Contains("labels file has 3 rows"),
                       std::runtime_error);
}

TEST_CASE("load_csv names the offending cell") {
  TempDir tmp;
  write_file(tmp.file("x.csv"), "a,b\n1,abc\n3,4\n");
  write_file(tmp.file("y.csv"), "0\n1\n");
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("x.csv"), tmp.file("y.csv")),
                       doctest::Contains("row 1, column 1"), std::runtime_error);
}

TEST_CASE("load_csv rejects labels outside {0,1} and non-finite cells") {
  TempDir tmp;
  write_file(tmp.file("x.csv"), "a\n1\n2\n");
  write_file(tmp.file("y.csv"), "0\n2\n");
  CHECK_THROWS_AS(load_csv(tmp.file("x.csv"), tmp.file("y.csv")), std::runtime_error);

  write_file(tmp.file("x2.csv"), "a\nnan\n2\n");
  write_file(tmp.file("y2.csv"), "0\n1\n");
  CHECK_THROWS_AS(load_csv(tmp.file("x2.csv"), tmp.file("y2.csv")), std::runtime_error);
}

TEST_CASE("zscore centers and scales with the n-1 denominator") {
  Dataset d;
  d.x.resize(3, 3);
  d.x.col(0) << 1.0, 2.0, 3.0;
  d.x.col(1) << 5.0, 5.0, 5.0;  // constant column maps to zeros
  d.x.col(2) << -1.0, 0.0, 1.0;
  d.y.resize(3);
  d.y << 0, 1, 0;
  d.feature_names = {"a", "b", "c"};

  const Dataset z = zscore(d);
  CHECK(z.x(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(z.x(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z.x(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(z.x.col(1).cwiseAbs().maxCoeff() == 0.0);
  // sd([-1,0,1]) with the n-1 denominator is exactly 1, so the column is
  // already Z-scored and must come back unchanged.
  CHECK(z.x(0, 2) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(z.x(2, 2) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("zscore requires n >= 2") {
  Dataset d;
  d.x.resize(1, 2);
  d.x << 1.0, 2.0;
  d.y.resize(1);
  d.y << 0;
  d.feature_names = {"a", "b"};
  CHECK_THROWS_AS(zscore(d), std::invalid_argument);
}

TEST_CASE("zscore is idempotent") {
  const Dataset d = small_dataset(40, 7, 11);
  const Dataset once = zscore(d);
  const Dataset twice = zscore(once);
  CHECK((twice.x - once.x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stratified_split honors per-class counts") {
  const Dataset d = small_dataset(400, 3, 21);  // balanced by construction
  const SplitPair split = stratified_split(d, 0.2, 99);
  CHECK(split.train.n() == 320);
  CHECK(split.test.n() == 80);
  CHECK((split.test.y.array() == 1).count() == 40);
  CHECK((split.test.y.array() == 0).count() == 40);
}

TEST_CASE("stratified_split is deterministic and clamps minority classes") {
  const Dataset d = small_dataset(60, 2, 5);
  const SplitPair a = stratified_split(d, 0.25, 123);
  const SplitPair b = stratified_split(d, 0.25, 123);
  CHECK(a.train.x == b.train.x);
  CHECK(a.test.x == b.test.x);
  CHECK(a.train.y == b.train.y);

  // 8/2 class split at fraction 0.2: round(2*0.2)=0 clamps to 1.
  Dataset tiny;
  tiny.x.resize(10, 1);
  tiny.y.resize(10);
  for (int i = 0; i < 10; ++i) {
    tiny.x(i, 0) = i;
    tiny.y(i) = i < 8 ? 0 : 1;
  }
  tiny.feature_names = {"a"};
  const SplitPair split = stratified_split(tiny, 0.2, 7);
  CHECK((split.test.y.array() == 1).count() == 1);
  CHECK((split.train.y.array() == 1).count() == 1);
}

TEST_CASE("stratified_split rejects singleton classes") {
  Dataset d;
  d.x.resize(3, 1);
  d.x << 1, 2, 3;
  d.y.resize(3);
  d.y << 0, 0, 1;
  d.feature_names = {"a"};
  CHECK_THROWS_AS(stratified_split(d, 0.5, 1), std::invalid_argument);
}

TEST_CASE("stratified_split partitions indices exactly for all seeds") {
  const Dataset d = small_dataset(57, 2, 31);
  for (std::uint64_t seed : {0ULL, 1ULL, 17ULL, 12345ULL}) {
    const SplitPair split = stratified_split(d, 0.3, seed);
    CHECK(split.train.n() + split.test.n() == d.n());
    // Feature 0 values are distinct draws, so multisets identify rows.
    std::multiset<double> all, seen;
    for (Eigen::Index i = 0; i < d.n(); ++i) all.insert(d.x(i, 0));
    for (Eigen::Index i = 0; i < split.train.n(); ++i) seen.insert(split.train.x(i, 0));
    for (Eigen::Index i = 0; i < split.test.n(); ++i) seen.insert(split.test.x(i, 0));
    CHECK(all == seen);
  }
}

TEST_CASE("save_csv then load_csv round-trips exactly") {
  TempDir tmp;
  const Dataset d = small_dataset(20, 5, 77);
  save_csv(d, tmp.file("x.csv"), tmp.file("y.csv"));
  const Dataset back = load_csv(tmp.file("x.csv"), tmp.file("y.csv"));
  CHECK(back.x == d.x);  // shortest round-trip formatting is exact
  CHECK(back.y == d.y);
  CHECK(back.feature_names == d.feature_names);
}
