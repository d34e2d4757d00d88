#include "forgenet/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "forgenet/num_format.hpp"
#include "forgenet/rng.hpp"

namespace forgenet {

void UGraph::add_edge(int u, int v) {
  if (u == v) throw std::invalid_argument("self-loops not allowed");
  if (u > v) std::swap(u, v);
  edges.emplace_back(u, v);
  adj[static_cast<std::size_t>(u)].push_back(v);
  adj[static_cast<std::size_t>(v)].push_back(u);
}

UGraph ba_graph(int p, int m, std::uint64_t seed) {
  if (m < 1 || p <= m) throw std::invalid_argument("ba_graph requires p > m >= 1");
  UGraph g;
  g.n = p;
  g.adj.resize(static_cast<std::size_t>(p));
  // Endpoint multiset: each edge contributes both endpoints, so uniform
  // draws from it are degree-proportional.
  std::vector<int> endpoints;
  for (int u = 0; u <= m; ++u) {
    for (int v = u + 1; v <= m; ++v) {
      g.add_edge(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  Rng rng(seed);
  std::vector<int> targets;
  for (int node = m + 1; node < p; ++node) {
    targets.clear();
    while (static_cast<int>(targets.size()) < m) {
      const int pick = endpoints[rng.uniform_int(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), pick) == targets.end()) {
        targets.push_back(pick);
      }
    }
    for (int t : targets) {
      g.add_edge(node, t);
      endpoints.push_back(node);
      endpoints.push_back(t);
    }
  }
  return g;
}

UGraph er_graph(int p, long long n_edges, std::uint64_t seed) {
  const long long total = static_cast<long long>(p) * (p - 1) / 2;
  if (n_edges < 0 || n_edges > total) {
    throw std::invalid_argument("n_edges outside [0, p(p-1)/2]");
  }
  // Floyd's algorithm: a uniform sample of n_edges distinct pair indices.
  Rng rng(seed);
  std::unordered_set<long long> chosen;
  chosen.reserve(static_cast<std::size_t>(n_edges) * 2 + 1);
  std::vector<long long> picks;
  picks.reserve(static_cast<std::size_t>(n_edges));
  for (long long t = total - n_edges; t < total; ++t) {
    const auto r = static_cast<long long>(rng.uniform_int(static_cast<std::uint64_t>(t + 1)));
    if (chosen.insert(r).second) {
      picks.push_back(r);
    } else {
      chosen.insert(t);
      picks.push_back(t);
    }
  }

  // Pair index k -> (i, j), i < j, rows in ascending i. offset(i) counts the
  // pairs with first element < i.
  auto offset = [p](long long i) {
    return i * p - i * (i + 1) / 2;
  };
  UGraph g;
  g.n = p;
  g.adj.resize(static_cast<std::size_t>(p));
  std::sort(picks.begin(), picks.end());
  for (long long k : picks) {
    long long lo = 0, hi = p - 1;
    while (lo < hi) {  // largest i with offset(i) <= k
      const long long mid = (lo + hi + 1) / 2;
      if (offset(mid) <= k) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    const auto i = static_cast<int>(lo);
    const auto j = static_cast<int>(lo + 1 + (k - offset(lo)));
    g.add_edge(i, j);
  }
  return g;
}

Eigen::MatrixXi shortest_paths(const UGraph& g) {
  Eigen::MatrixXi dist(g.n, g.n);
  std::vector<int> d(static_cast<std::size_t>(g.n));
  std::queue<int> frontier;
  for (int src = 0; src < g.n; ++src) {
    std::fill(d.begin(), d.end(), -1);
    d[static_cast<std::size_t>(src)] = 0;
    frontier.push(src);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v : g.adj[static_cast<std::size_t>(u)]) {
        if (d[static_cast<std::size_t>(v)] < 0) {
          d[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(u)] + 1;
          frontier.push(v);
        }
      }
    }
    for (int v = 0; v < g.n; ++v) {
      if (d[static_cast<std::size_t>(v)] < 0) {
        throw std::runtime_error("graph is disconnected (vertex " +
                                 std::to_string(v) + " unreachable)");
      }
      dist(src, v) = d[static_cast<std::size_t>(v)];
    }
  }
  return dist;
}

CovarianceResult covariance(const Eigen::MatrixXi& dist, double base) {
  if (base <= 0.0 || base >= 1.0) throw std::invalid_argument("base must lie in (0, 1)");
  CovarianceResult res;
  const auto p = dist.rows();
  res.sigma.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      res.sigma(i, j) = std::pow(base, dist(i, j));
    }
  }
  Eigen::LLT<Matrix> llt(res.sigma);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(res.sigma, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    res.jitter = std::max(0.0, -min_eig) + 1e-8;
    res.sigma.diagonal().array() += res.jitter;
  }
  return res;
}

Matrix sample_mvn(const Matrix& sigma, int n, std::uint64_t seed) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("covariance is not positive definite");
  }
  const Matrix l = llt.matrixL();
  Rng rng(seed);
  Matrix z(n, sigma.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  }
  return z * l.transpose();
}

CoreSelection select_true_predictors(const UGraph& g, int n_cores, int per_core,
                                     std::uint64_t seed) {
  if (n_cores < 1 || per_core < 1) {
    throw std::invalid_argument("n_cores and per_core must be positive");
  }
  std::vector<int> by_degree(static_cast<std::size_t>(g.n));
  std::iota(by_degree.begin(), by_degree.end(), 0);
  std::sort(by_degree.begin(), by_degree.end(), [&g](int a, int b) {
    const auto da = g.adj[static_cast<std::size_t>(a)].size();
    const auto db = g.adj[static_cast<std::size_t>(b)].size();
    return da > db || (da == db && a < b);
  });
  const auto top = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.05 * g.n)));
  std::vector<int> hubs;
  for (std::size_t i = 0; i < top && i < by_degree.size(); ++i) {
    const int v = by_degree[i];
    if (static_cast<int>(g.adj[static_cast<std::size_t>(v)].size()) >= per_core - 1) {
      hubs.push_back(v);
    }
  }
  if (static_cast<int>(hubs.size()) < n_cores) {
    throw std::runtime_error("not enough hub nodes with the required degree");
  }

  Rng rng(seed);
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    CoreSelection sel;
    const auto core_pick = rng.sample_without_replacement(
        static_cast<int>(hubs.size()), n_cores);
    for (int idx : core_pick) sel.cores.push_back(hubs[static_cast<std::size_t>(idx)]);

    std::set<int> taken;
    bool ok = true;
    for (int core : sel.cores) {
      if (!taken.insert(core).second) {
        ok = false;
        break;
      }
      std::vector<int> pool;
      for (int nb : g.adj[static_cast<std::size_t>(core)]) {
        if (!taken.count(nb)) pool.push_back(nb);
      }
      std::sort(pool.begin(), pool.end());
      if (static_cast<int>(pool.size()) < per_core - 1) {
        ok = false;
        break;
      }
      for (const int idx : rng.sample_without_replacement(
               static_cast<int>(pool.size()), per_core - 1)) {
        taken.insert(pool[static_cast<std::size_t>(idx)]);
      }
    }
    if (!ok) continue;
    sel.true_set.assign(taken.begin(), taken.end());
    return sel;
  }
  throw std::runtime_error("could not select true predictors after bounded retries");
}

namespace {

// Min-max rescale to [0,1]; a constant vector maps to zeros.
Vector min_max(const Vector& v) {
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (hi == lo) return Vector::Zero(v.size());
  return (v.array() - lo) / (hi - lo);
}

double median(Vector v) {
  const auto n = v.size();
  std::sort(v.data(), v.data() + n);
  if (n % 2 == 1) return v(n / 2);
  return 0.5 * (v(n / 2 - 1) + v(n / 2));
}

}  // namespace

Vector outcome_transform(const Vector& score) {
  return 0.7 * min_max(score.array().tanh()) +
         0.3 * min_max(score.array().square());
}

Outcome generate_outcome(const Matrix& x_true, double beta_range,
                         std::uint64_t seed) {
  if (x_true.cols() < 1 || x_true.rows() < 2) {
    throw std::invalid_argument("generate_outcome needs p0 >= 1 and n >= 2");
  }
  Rng rng(seed);
  Outcome out;
  out.beta.resize(x_true.cols());
  for (Eigen::Index j = 0; j < out.beta.size(); ++j) {
    out.beta(j) = rng.uniform(-beta_range, beta_range);
  }
  out.beta0 = rng.uniform(-beta_range, beta_range);

  const Vector score = (x_true * out.beta).array() + out.beta0;
  const Vector g = outcome_transform(score);
  out.threshold = median(g);
  out.y.resize(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    out.y(i) = g(i) > out.threshold ? 1 : 0;
  }
  return out;
}

std::set<int> relevant_features(const UGraph& g, const std::vector<int>& true_set) {
  std::set<int> relevant(true_set.begin(), true_set.end());
  for (int v : true_set) {
    for (int nb : g.adj[static_cast<std::size_t>(v)]) relevant.insert(nb);
  }
  return relevant;
}

SynthOutput generate(const SynthSpec& spec) {
  if (spec.n_cores < 1 || spec.p0 % spec.n_cores != 0) {
    throw std::invalid_argument("p0 must be divisible by n_cores");
  }
  if (spec.base_corr <= 0.0 || spec.base_corr >= 1.0) {
    throw std::invalid_argument("base_corr must lie in (0, 1)");
  }

  SynthOutput out;
  out.true_graph = ba_graph(spec.p, spec.ba_m, derive_seed(spec.seed, 1));
  const auto dist = shortest_paths(out.true_graph);
  auto cov = covariance(dist, spec.base_corr);
  out.jitter = cov.jitter;
  out.data.x = sample_mvn(cov.sigma, spec.n, derive_seed(spec.seed, 2));

  const auto sel = select_true_predictors(out.true_graph, spec.n_cores,
                                          spec.p0 / spec.n_cores,
                                          derive_seed(spec.seed, 3));
  out.true_predictors = sel.true_set;

  Matrix x_true(spec.n, spec.p0);
  for (int j = 0; j < spec.p0; ++j) {
    x_true.col(j) = out.data.x.col(out.true_predictors[static_cast<std::size_t>(j)]);
  }
  const auto outcome =
      generate_outcome(x_true, spec.beta_range, derive_seed(spec.seed, 4));
  out.data.y = outcome.y;
  out.beta = outcome.beta;
  out.beta0 = outcome.beta0;
  out.threshold = outcome.threshold;

  const auto rel = relevant_features(out.true_graph, out.true_predictors);
  out.relevant.assign(rel.begin(), rel.end());

  out.data.feature_names.reserve(static_cast<std::size_t>(spec.p));
  for (int j = 0; j < spec.p; ++j) {
    out.data.feature_names.push_back("f" + std::to_string(j));
  }
  return out;
}

void write_synth(const std::string& dir, const SynthSpec& spec,
                 const SynthOutput& out) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_csv(out.data, (fs::path(dir) / "features.csv").string(),
           (fs::path(dir) / "labels.csv").string());

  {
    std::ofstream edges(fs::path(dir) / "true_graph.edges", std::ios::binary);
    for (const auto& [u, v] : out.true_graph.edges) {
      edges << out.data.feature_names[static_cast<std::size_t>(u)] << ','
            << out.data.feature_names[static_cast<std::size_t>(v)] << '\n';
    }
  }
  {
    std::ofstream f(fs::path(dir) / "true_predictors.txt", std::ios::binary);
    for (int v : out.true_predictors) f << v << '\n';
  }
  {
    std::ofstream f(fs::path(dir) / "relevant_features.txt", std::ios::binary);
    for (int v : out.relevant) f << v << '\n';
  }

  nlohmann::json manifest;
  manifest["p"] = spec.p;
  manifest["n"] = spec.n;
  manifest["n_cores"] = spec.n_cores;
  manifest["p0"] = spec.p0;
  manifest["ba_m"] = spec.ba_m;
  manifest["base_corr"] = spec.base_corr;
  manifest["beta_range"] = spec.beta_range;
  manifest["seed"] = spec.seed;
  manifest["beta"] = std::vector<double>(out.beta.data(), out.beta.data() + out.beta.size());
  manifest["beta0"] = out.beta0;
  manifest["threshold"] = out.threshold;
  manifest["jitter"] = out.jitter;
  manifest["n_edges"] = out.true_graph.n_edges();
  manifest["n_relevant"] = out.relevant.size();
  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << '\n';
}

}  // namespace forgenet
