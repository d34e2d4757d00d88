#include "forgenet/pipeline.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "forgenet/num_format.hpp"
#include "forgenet/rng.hpp"

namespace forgenet {

namespace {

constexpr std::uint64_t kForestStream = 1;
constexpr std::uint64_t kNetStream = 2;

}  // namespace

ForgeNetModel fit(const Dataset& d_train, const PipelineConfig& cfg,
                  std::uint64_t seed) {
  ForgeNetModel m;
  m.config = cfg;
  m.seed = seed;
  m.feature_names = d_train.feature_names;

  if (cfg.normalize) {
    m.norm = fit_normalization(d_train.x);
  } else {
    m.norm.mean = Vector::Zero(d_train.p());
    m.norm.sd = Vector::Ones(d_train.p());
  }
  Dataset work;
  work.x = apply_normalization(d_train.x, m.norm);
  work.y = d_train.y;
  work.feature_names = d_train.feature_names;

  const auto forest_seed = derive_seed(seed, kForestStream);
  m.forest = cfg.forest.kind == ForestKind::RF
                 ? train_rf(work, cfg.forest.rf, forest_seed)
                 : train_gbm(work, cfg.forest.gbm, forest_seed);

  m.graph = extract_graph(m.forest, cfg.self_loops);
  const Dataset reduced = reduce_dataset(work, m.graph);

  NetConfig net_cfg = cfg.net;
  net_cfg.seed = derive_seed(seed, kNetStream);
  m.net = init(m.graph.adjacency, net_cfg);
  train(m.net, reduced, net_cfg);
  return m;
}

Vector predict(const ForgeNetModel& m, const Matrix& x_test,
               bool self_normalize) {
  if (x_test.cols() != m.norm.mean.size()) {
    throw std::invalid_argument("predict expects " +
                                std::to_string(m.norm.mean.size()) +
                                " columns, got " + std::to_string(x_test.cols()));
  }
  Matrix normalized;
  if (!m.config.normalize) {
    normalized = x_test;
  } else if (self_normalize) {
    normalized = apply_normalization(x_test, fit_normalization(x_test));
  } else {
    normalized = apply_normalization(x_test, m.norm);
  }
  Matrix reduced(normalized.rows(), static_cast<Eigen::Index>(m.graph.vertices.size()));
  for (std::size_t j = 0; j < m.graph.vertices.size(); ++j) {
    reduced.col(static_cast<Eigen::Index>(j)) = normalized.col(m.graph.vertices[j]);
  }
  return predict(m.net, reduced);
}

ImportanceReport feature_importance(const ForgeNetModel& m) {
  return gcw_scores(m.net, m.graph, static_cast<int>(m.norm.mean.size()));
}

Matrix align_columns(const Matrix& x, const std::vector<std::string>& from_names,
                     const std::vector<std::string>& to_names) {
  if (static_cast<std::size_t>(x.cols()) != from_names.size()) {
    throw std::invalid_argument("column count does not match from_names");
  }
  std::unordered_map<std::string, Eigen::Index> pos;
  for (std::size_t j = 0; j < from_names.size(); ++j) {
    pos[from_names[j]] = static_cast<Eigen::Index>(j);
  }
  Matrix out(x.rows(), static_cast<Eigen::Index>(to_names.size()));
  for (std::size_t j = 0; j < to_names.size(); ++j) {
    const auto it = pos.find(to_names[j]);
    if (it == pos.end()) {
      throw std::invalid_argument("missing feature column: " + to_names[j]);
    }
    out.col(static_cast<Eigen::Index>(j)) = x.col(it->second);
  }
  return out;
}

Matrix align_for_predict(const ForgeNetModel& m, const Matrix& x,
                         const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(x.cols()) != names.size()) {
    throw std::invalid_argument("column count does not match names");
  }
  std::unordered_map<std::string, Eigen::Index> pos;
  for (std::size_t j = 0; j < names.size(); ++j) {
    pos[names[j]] = static_cast<Eigen::Index>(j);
  }
  std::unordered_map<int, bool> is_vertex;
  for (int v : m.graph.vertices) is_vertex[v] = true;

  Matrix out(x.rows(), static_cast<Eigen::Index>(m.feature_names.size()));
  for (std::size_t j = 0; j < m.feature_names.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const auto it = pos.find(m.feature_names[j]);
    if (it != pos.end()) {
      out.col(col) = x.col(it->second);
    } else if (!is_vertex.count(static_cast<int>(j))) {
      out.col(col).setConstant(m.norm.mean(col));  // normalizes to zero
    } else {
      throw std::invalid_argument("missing graph feature column: " +
                                  m.feature_names[j]);
    }
  }
  return out;
}

void save_model(const std::string& dir, const ForgeNetModel& m) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_forest(m.forest, (fs::path(dir) / "forest.json").string());
  save_edge_list((fs::path(dir) / "graph.edges").string(), m.graph, m.feature_names);
  save_net(m.net, (fs::path(dir) / "net.json").string());

  {
    std::ofstream norm_csv(fs::path(dir) / "norm.csv", std::ios::binary);
    if (!norm_csv) throw std::runtime_error("cannot write norm.csv");
    norm_csv << "feature_name,mean,sd\n";
    for (Eigen::Index j = 0; j < m.norm.mean.size(); ++j) {
      norm_csv << m.feature_names[static_cast<std::size_t>(j)] << ','
               << format_double(m.norm.mean(j)) << ','
               << format_double(m.norm.sd(j)) << '\n';
    }
  }

  nlohmann::json manifest;
  manifest["version"] = "forgenet-v1";
  manifest["seed"] = m.seed;
  manifest["vertices"] = m.graph.vertices;
  manifest["config"] = {
      {"forest_kind", m.config.forest.kind == ForestKind::RF ? "rf" : "gbm"},
      {"rf",
       {{"n_trees", m.config.forest.rf.n_trees},
        {"mtry", m.config.forest.rf.mtry},
        {"max_depth", m.config.forest.rf.max_depth},
        {"min_leaf", m.config.forest.rf.min_leaf}}},
      {"gbm",
       {{"n_trees", m.config.forest.gbm.n_trees},
        {"learning_rate", m.config.forest.gbm.learning_rate},
        {"max_depth", m.config.forest.gbm.max_depth},
        {"subsample", m.config.forest.gbm.subsample}}},
      {"normalize", m.config.normalize},
      {"self_loops", m.config.self_loops}};
  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << '\n';
}

ForgeNetModel load_model(const std::string& dir) {
  namespace fs = std::filesystem;
  ForgeNetModel m;
  m.forest = load_forest((fs::path(dir) / "forest.json").string());
  m.net = load_net((fs::path(dir) / "net.json").string());

  std::ifstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!mf) throw std::runtime_error("cannot open manifest.json in " + dir);
  nlohmann::json manifest;
  mf >> manifest;
  if (manifest.at("version").get<std::string>() != "forgenet-v1") {
    throw std::runtime_error("unsupported model bundle version");
  }
  m.seed = manifest.at("seed").get<std::uint64_t>();
  const auto& cfg = manifest.at("config");
  m.config.forest.kind = cfg.at("forest_kind").get<std::string>() == "rf"
                             ? ForestKind::RF
                             : ForestKind::GBM;
  m.config.forest.rf.n_trees = cfg.at("rf").at("n_trees").get<int>();
  m.config.forest.rf.mtry = cfg.at("rf").at("mtry").get<int>();
  m.config.forest.rf.max_depth = cfg.at("rf").at("max_depth").get<int>();
  m.config.forest.rf.min_leaf = cfg.at("rf").at("min_leaf").get<int>();
  m.config.forest.gbm.n_trees = cfg.at("gbm").at("n_trees").get<int>();
  m.config.forest.gbm.learning_rate = cfg.at("gbm").at("learning_rate").get<double>();
  m.config.forest.gbm.max_depth = cfg.at("gbm").at("max_depth").get<int>();
  m.config.forest.gbm.subsample = cfg.at("gbm").at("subsample").get<double>();
  m.config.normalize = cfg.at("normalize").get<bool>();
  m.config.self_loops = cfg.at("self_loops").get<bool>();
  m.config.net = m.net.config;

  // norm.csv carries the feature names and their training statistics.
  std::ifstream norm_csv(fs::path(dir) / "norm.csv", std::ios::binary);
  if (!norm_csv) throw std::runtime_error("cannot open norm.csv in " + dir);
  std::string line;
  std::getline(norm_csv, line);  // header
  std::vector<std::string> names;
  std::vector<double> means, sds;
  while (std::getline(norm_csv, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw std::runtime_error("malformed norm.csv line: " + line);
    }
    names.push_back(line.substr(0, c1));
    double mean = 0.0, sd = 0.0;
    const auto* base = line.data();
    auto r1 = std::from_chars(base + c1 + 1, base + c2, mean);
    auto r2 = std::from_chars(base + c2 + 1, base + line.size(), sd);
    if (r1.ec != std::errc{} || r2.ec != std::errc{}) {
      throw std::runtime_error("malformed norm.csv line: " + line);
    }
    means.push_back(mean);
    sds.push_back(sd);
  }
  m.feature_names = std::move(names);
  m.norm.mean = Eigen::Map<const Vector>(means.data(),
                                         static_cast<Eigen::Index>(means.size()));
  m.norm.sd = Eigen::Map<const Vector>(sds.data(),
                                       static_cast<Eigen::Index>(sds.size()));

  // Rebuild the graph from the stored vertices and edge list.
  const auto vertices = manifest.at("vertices").get<std::vector<int>>();
  std::unordered_map<std::string, int> name_to_index;
  for (std::size_t j = 0; j < m.feature_names.size(); ++j) {
    name_to_index[m.feature_names[j]] = static_cast<int>(j);
  }
  std::vector<std::pair<VertexSet, EdgeSet>> parts(1);
  parts[0].first.insert(vertices.begin(), vertices.end());
  std::ifstream edges(fs::path(dir) / "graph.edges", std::ios::binary);
  if (!edges) throw std::runtime_error("cannot open graph.edges in " + dir);
  while (std::getline(edges, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const int u = name_to_index.at(line.substr(0, comma));
    const int v = name_to_index.at(line.substr(comma + 1));
    parts[0].second.insert({u, v});
  }
  m.graph = merge_graphs(parts, m.config.self_loops);
  return m;
}

}  // namespace forgenet
