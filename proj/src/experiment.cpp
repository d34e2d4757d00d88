#include "forgenet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "forgenet/baselines.hpp"
#include "forgenet/metrics.hpp"
#include "forgenet/num_format.hpp"
#include "forgenet/rng.hpp"

namespace forgenet {

namespace {

constexpr std::uint64_t kDatasetStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kErGraphStream = 3;
constexpr std::uint64_t kMethodStreamBase = 16;

struct ReplicateContext {
  SynthOutput synth;
  SplitPair split;
  IntVector relevant_labels;  // length p
  std::set<int> relevant_set;
  double relevant_fraction = 0.0;
  std::uint64_t rep_master = 0;
};

FeatureGraph undirected_to_feature_graph(const UGraph& g) {
  std::vector<std::pair<VertexSet, EdgeSet>> parts(1);
  for (int v = 0; v < g.n; ++v) parts[0].first.insert(v);
  for (const auto& [u, v] : g.edges) {
    parts[0].second.insert({u, v});
    parts[0].second.insert({v, u});
  }
  return merge_graphs(parts, /*self_loops=*/true);
}

Vector importance_to_scores(const ImportanceReport& report) {
  return Eigen::Map<const Vector>(report.scores.data(),
                                  static_cast<Eigen::Index>(report.scores.size()));
}

class MethodRunner {
 public:
  MethodRunner(const ExperimentConfig& cfg, const ReplicateContext& ctx)
      : cfg_(cfg), ctx_(ctx) {}

  ReplicateResult run_method(Method method, int replicate,
                             std::optional<double> lrl_precision) {
    ReplicateResult row;
    row.method = method;
    row.replicate = replicate;
    row.relevant_fraction = ctx_.relevant_fraction;
    row.lrl_precision = lrl_precision;

    const auto seed = derive_seed(
        ctx_.rep_master, kMethodStreamBase + static_cast<std::uint64_t>(method));
    const auto start = std::chrono::steady_clock::now();
    try {
      switch (method) {
        case Method::ForgenetRf:
          run_forgenet(row, ForestKind::RF, seed, lrl_precision);
          break;
        case Method::ForgenetGbm:
          run_forgenet(row, ForestKind::GBM, seed, lrl_precision);
          break;
        case Method::Rf: {
          const Forest f = train_rf(ctx_.split.train, cfg_.rf, seed);
          row.roc_auc = roc_auc(predict_proba(f, ctx_.split.test.x), ctx_.split.test.y);
          break;
        }
        case Method::Gbm: {
          const Forest f = train_gbm(ctx_.split.train, cfg_.gbm, seed);
          row.roc_auc = roc_auc(predict_proba(f, ctx_.split.test.x), ctx_.split.test.y);
          break;
        }
        case Method::Lrl:
          run_lrl(row, seed);
          break;
        case Method::GedfnTrue:
          run_gedfn(row, undirected_to_feature_graph(ctx_.synth.true_graph), seed,
                    lrl_precision);
          break;
        case Method::GedfnMis: {
          const auto er = er_graph(cfg_.synth.p, ctx_.synth.true_graph.n_edges(),
                                   derive_seed(ctx_.rep_master, kErGraphStream));
          run_gedfn(row, undirected_to_feature_graph(er), seed, lrl_precision);
          break;
        }
      }
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    row.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
  }

 private:
  void score_features(ReplicateResult& row, const Vector& scores,
                      std::optional<double> lrl_precision) {
    row.feature_pr_auc = pr_auc(scores, ctx_.relevant_labels);
    if (lrl_precision.has_value()) {
      row.recall_at_lrl_precision =
          recall_at_precision(scores, ctx_.relevant_labels, *lrl_precision);
      row.recall_excluded = *lrl_precision == 0.0;
    }
  }

  void run_forgenet(ReplicateResult& row, ForestKind kind, std::uint64_t seed,
                    std::optional<double> lrl_precision) {
    PipelineConfig pcfg;
    pcfg.forest.kind = kind;
    pcfg.forest.rf = cfg_.rf;
    pcfg.forest.gbm = cfg_.gbm;
    pcfg.net = cfg_.net;
    const ForgeNetModel model = fit(ctx_.split.train, pcfg, seed);
    row.roc_auc = roc_auc(predict(model, ctx_.split.test.x), ctx_.split.test.y);
    score_features(row, importance_to_scores(feature_importance(model)), lrl_precision);
  }

  void run_gedfn(ReplicateResult& row, const FeatureGraph& graph, std::uint64_t seed,
                 std::optional<double> lrl_precision) {
    const Normalization norm = fit_normalization(ctx_.split.train.x);
    Dataset train_data;
    train_data.x = apply_normalization(ctx_.split.train.x, norm);
    train_data.y = ctx_.split.train.y;
    train_data.feature_names = ctx_.split.train.feature_names;

    NetConfig net_cfg = cfg_.net;
    net_cfg.seed = derive_seed(seed, 2);
    MaskedNet net = init(graph.adjacency, net_cfg);
    train(net, train_data, net_cfg);

    const Matrix test_x = apply_normalization(ctx_.split.test.x, norm);
    row.roc_auc = roc_auc(predict(net, test_x), ctx_.split.test.y);
    const auto report = gcw_scores(net, graph, cfg_.synth.p);
    score_features(row, importance_to_scores(report), lrl_precision);
  }

 public:
  // Returns the set precision so scored methods can be evaluated at it.
  std::pair<ReplicateResult, std::optional<double>> run_lrl_first(int replicate) {
    ReplicateResult row;
    row.method = Method::Lrl;
    row.replicate = replicate;
    row.relevant_fraction = ctx_.relevant_fraction;
    const auto seed = derive_seed(
        ctx_.rep_master, kMethodStreamBase + static_cast<std::uint64_t>(Method::Lrl));
    std::optional<double> precision;
    const auto start = std::chrono::steady_clock::now();
    try {
      precision = run_lrl(row, seed);
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    row.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.lrl_precision = precision;
    return {row, precision};
  }

 private:
  double run_lrl(ReplicateResult& row, std::uint64_t seed) {
    const Normalization norm = fit_normalization(ctx_.split.train.x);
    Dataset train_data;
    train_data.x = apply_normalization(ctx_.split.train.x, norm);
    train_data.y = ctx_.split.train.y;
    train_data.feature_names = ctx_.split.train.feature_names;

    const auto grid = default_lambda_grid(train_data.x, train_data.y,
                                          cfg_.lrl.n_lambdas,
                                          cfg_.lrl.lambda_min_ratio);
    const LinearModel model = train_lrl(train_data, grid, cfg_.lrl.cv_folds, seed);

    const Matrix test_x = apply_normalization(ctx_.split.test.x, norm);
    row.roc_auc = roc_auc(lrl_predict(model, test_x), ctx_.split.test.y);

    const auto selected_vec = lrl_selected(model);
    const std::set<int> selected(selected_vec.begin(), selected_vec.end());
    const auto [precision, recall] =
        set_precision_recall(selected, ctx_.relevant_set, cfg_.synth.p);
    row.recall_at_lrl_precision = recall;
    row.recall_excluded = precision == 0.0;
    return precision;
  }

  const ExperimentConfig& cfg_;
  const ReplicateContext& ctx_;
};

ReplicateContext make_context(const ExperimentConfig& cfg, int replicate) {
  ReplicateContext ctx;
  ctx.rep_master = derive_seed(cfg.master_seed,
                               1000 + static_cast<std::uint64_t>(replicate));
  SynthSpec spec = cfg.synth;
  spec.seed = derive_seed(ctx.rep_master, kDatasetStream);
  ctx.synth = generate(spec);
  ctx.split = stratified_split(ctx.synth.data, cfg.test_fraction,
                               derive_seed(ctx.rep_master, kSplitStream));
  ctx.relevant_set.insert(ctx.synth.relevant.begin(), ctx.synth.relevant.end());
  ctx.relevant_labels = IntVector::Zero(cfg.synth.p);
  for (int v : ctx.synth.relevant) ctx.relevant_labels(v) = 1;
  ctx.relevant_fraction = static_cast<double>(ctx.synth.relevant.size()) / cfg.synth.p;
  return ctx;
}

std::vector<ReplicateResult> run_replicate(const ExperimentConfig& cfg,
                                           int replicate) {
  const ReplicateContext ctx = make_context(cfg, replicate);
  MethodRunner runner(cfg, ctx);

  std::optional<ReplicateResult> lrl_row;
  std::optional<double> lrl_precision;
  const bool lrl_requested =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::Lrl) !=
      cfg.methods.end();
  if (lrl_requested) {
    auto [row, precision] = runner.run_lrl_first(replicate);
    lrl_row = std::move(row);
    lrl_precision = precision;
  }

  std::vector<ReplicateResult> rows;
  rows.reserve(cfg.methods.size());
  for (Method method : cfg.methods) {
    if (method == Method::Lrl) {
      rows.push_back(*lrl_row);
    } else {
      rows.push_back(runner.run_method(method, replicate, lrl_precision));
    }
  }
  return rows;
}

std::string opt_str(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : std::string();
}

// Failure text lands in a CSV cell; keep it one comma-free line.
std::string sanitize_failure(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::ForgenetRf: return "forgenet_rf";
    case Method::ForgenetGbm: return "forgenet_gbm";
    case Method::Rf: return "rf";
    case Method::Gbm: return "gbm";
    case Method::Lrl: return "lrl";
    case Method::GedfnTrue: return "gedfn_true";
    case Method::GedfnMis: return "gedfn_mis";
  }
  throw std::logic_error("unknown method");
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::ForgenetRf, Method::ForgenetGbm, Method::Rf, Method::Gbm,
                   Method::Lrl, Method::GedfnTrue, Method::GedfnMis}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown method: " + name);
}

ExperimentReport run(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (cfg.methods.empty()) throw std::invalid_argument("no methods requested");

  std::vector<std::vector<ReplicateResult>> per_replicate(
      static_cast<std::size_t>(cfg.replicates));

  int threads = cfg.threads;
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
  }
  threads = std::min(threads, cfg.replicates);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= cfg.replicates || failed.load()) break;
      try {
        per_replicate[static_cast<std::size_t>(r)] = run_replicate(cfg, r);
      } catch (const std::exception& e) {
        // Dataset generation failed; method-level failures are already
        // captured per row.
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) {
    throw std::runtime_error("replicate generation failed: " + first_error);
  }

  ExperimentReport report;
  for (auto& rows : per_replicate) {
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

// Plain forests expose no importance scores, so PR-AUC and
// recall-at-precision structurally do not apply; LRL has a selected set but
// no ranking, so only its set recall appears.
bool metric_applies(Method method, const std::string& metric) {
  if (metric == "roc_auc") return true;
  if (method == Method::Rf || method == Method::Gbm) return false;
  if (method == Method::Lrl) return metric == "recall_at_lrl_precision";
  return true;
}

}  // namespace

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg,
                                  const ExperimentReport& report) {
  std::vector<SummaryRow> out;
  const std::vector<std::string> metrics{"roc_auc", "feature_pr_auc",
                                         "recall_at_lrl_precision"};
  for (Method method : cfg.methods) {
    for (const auto& metric : metrics) {
      if (!metric_applies(method, metric)) continue;
      std::vector<double> values;
      for (const auto& row : report.rows) {
        if (row.method != method || !row.failure.empty()) continue;
        std::optional<double> v;
        if (metric == "roc_auc") {
          v = row.roc_auc;
        } else if (metric == "feature_pr_auc") {
          v = row.feature_pr_auc;
        } else {
          if (row.recall_excluded) continue;
          v = row.recall_at_lrl_precision;
        }
        if (v.has_value()) values.push_back(*v);
      }
      if (values.empty()) {
        std::cerr << "warning: no successful replicates for " << method_name(method)
                  << "/" << metric << "; omitted from summary\n";
        continue;
      }
      SummaryRow srow;
      srow.method = method_name(method);
      srow.metric = metric;
      srow.n = static_cast<int>(values.size());
      double sum = 0.0;
      for (double v : values) sum += v;
      srow.mean = sum / static_cast<double>(values.size());
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - srow.mean) * (v - srow.mean);
        const double sd = std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
        srow.se = sd / std::sqrt(static_cast<double>(values.size()));
      } else {
        srow.se = 0.0;
        srow.note = "single_replicate";
      }
      out.push_back(std::move(srow));
    }
  }
  return out;
}

void write_report(const ExperimentConfig& cfg, const ExperimentReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);

  {
    std::ofstream csv(fs::path(cfg.output_dir) / "replicates.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write replicates.csv");
    csv << "method,replicate,roc_auc,feature_pr_auc,recall_at_lrl_precision,"
           "recall_excluded,lrl_precision,relevant_fraction,runtime_seconds,"
           "failure\n";
    for (const auto& row : report.rows) {
      csv << method_name(row.method) << ',' << row.replicate << ','
          << opt_str(row.roc_auc) << ',' << opt_str(row.feature_pr_auc) << ','
          << opt_str(row.recall_at_lrl_precision) << ','
          << (row.recall_excluded ? 1 : 0) << ',' << opt_str(row.lrl_precision)
          << ',' << format_double(row.relevant_fraction) << ','
          << format_double(row.runtime_seconds) << ','
          << sanitize_failure(row.failure) << '\n';
    }
  }

  {
    std::ofstream csv(fs::path(cfg.output_dir) / "summary.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write summary.csv");
    csv << "method,metric,mean,se,n,note\n";
    for (const auto& srow : summarize(cfg, report)) {
      csv << srow.method << ',' << srow.metric << ',' << format_double(srow.mean)
          << ',' << format_double(srow.se) << ',' << srow.n << ',' << srow.note
          << '\n';
    }
  }

  nlohmann::json manifest;
  manifest["master_seed"] = cfg.master_seed;
  manifest["replicates"] = cfg.replicates;
  manifest["test_fraction"] = cfg.test_fraction;
  auto& methods = manifest["methods"] = nlohmann::json::array();
  for (Method m : cfg.methods) methods.push_back(method_name(m));
  manifest["synth"] = {{"p", cfg.synth.p},         {"n", cfg.synth.n},
                       {"n_cores", cfg.synth.n_cores}, {"p0", cfg.synth.p0},
                       {"ba_m", cfg.synth.ba_m},   {"base_corr", cfg.synth.base_corr},
                       {"beta_range", cfg.synth.beta_range}};
  manifest["rf"] = {{"n_trees", cfg.rf.n_trees},
                    {"mtry", cfg.rf.mtry},
                    {"max_depth", cfg.rf.max_depth},
                    {"min_leaf", cfg.rf.min_leaf}};
  manifest["gbm"] = {{"n_trees", cfg.gbm.n_trees},
                     {"learning_rate", cfg.gbm.learning_rate},
                     {"max_depth", cfg.gbm.max_depth},
                     {"subsample", cfg.gbm.subsample}};
  manifest["net"] = {{"hidden_dims", cfg.net.hidden_dims},
                     {"learning_rate", cfg.net.learning_rate},
                     {"batch_size", cfg.net.batch_size},
                     {"epochs", cfg.net.epochs},
                     {"dropout_keep", cfg.net.dropout_keep}};
  manifest["lrl"] = {{"n_lambdas", cfg.lrl.n_lambdas},
                     {"lambda_min_ratio", cfg.lrl.lambda_min_ratio},
                     {"cv_folds", cfg.lrl.cv_folds}};
  std::ofstream mf(fs::path(cfg.output_dir) / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << '\n';
}

ExperimentReport read_replicates_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  ExperimentReport report;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      if (pos == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (cells.size() != 10) throw std::runtime_error("malformed replicates.csv row");
    auto parse_opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{}) throw std::runtime_error("bad number: " + s);
      return v;
    };
    ReplicateResult row;
    row.method = method_from_name(cells[0]);
    row.replicate = std::stoi(cells[1]);
    row.roc_auc = parse_opt(cells[2]);
    row.feature_pr_auc = parse_opt(cells[3]);
    row.recall_at_lrl_precision = parse_opt(cells[4]);
    row.recall_excluded = cells[5] == "1";
    row.lrl_precision = parse_opt(cells[6]);
    row.relevant_fraction = parse_opt(cells[7]).value_or(0.0);
    row.runtime_seconds = parse_opt(cells[8]).value_or(0.0);
    row.failure = cells[9];
    report.rows.push_back(std::move(row));
  }
  return report;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    if (s.contains("p")) cfg.synth.p = s.at("p").get<int>();
    if (s.contains("n")) cfg.synth.n = s.at("n").get<int>();
    if (s.contains("n_cores")) cfg.synth.n_cores = s.at("n_cores").get<int>();
    if (s.contains("p0")) cfg.synth.p0 = s.at("p0").get<int>();
    if (s.contains("ba_m")) cfg.synth.ba_m = s.at("ba_m").get<int>();
    if (s.contains("base_corr")) cfg.synth.base_corr = s.at("base_corr").get<double>();
    if (s.contains("beta_range")) cfg.synth.beta_range = s.at("beta_range").get<double>();
  }
  if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<int>();
  if (j.contains("test_fraction")) cfg.test_fraction = j.at("test_fraction").get<double>();
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& name : j.at("methods")) {
      cfg.methods.push_back(method_from_name(name.get<std::string>()));
    }
  }
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("rf")) {
    const auto& s = j.at("rf");
    if (s.contains("n_trees")) cfg.rf.n_trees = s.at("n_trees").get<int>();
    if (s.contains("mtry")) cfg.rf.mtry = s.at("mtry").get<int>();
    if (s.contains("max_depth")) cfg.rf.max_depth = s.at("max_depth").get<int>();
    if (s.contains("min_leaf")) cfg.rf.min_leaf = s.at("min_leaf").get<int>();
  }
  if (j.contains("gbm")) {
    const auto& s = j.at("gbm");
    if (s.contains("n_trees")) cfg.gbm.n_trees = s.at("n_trees").get<int>();
    if (s.contains("learning_rate")) cfg.gbm.learning_rate = s.at("learning_rate").get<double>();
    if (s.contains("max_depth")) cfg.gbm.max_depth = s.at("max_depth").get<int>();
    if (s.contains("subsample")) cfg.gbm.subsample = s.at("subsample").get<double>();
  }
  if (j.contains("net")) {
    const auto& s = j.at("net");
    if (s.contains("hidden_dims")) cfg.net.hidden_dims = s.at("hidden_dims").get<std::vector<int>>();
    if (s.contains("learning_rate")) cfg.net.learning_rate = s.at("learning_rate").get<double>();
    if (s.contains("batch_size")) cfg.net.batch_size = s.at("batch_size").get<int>();
    if (s.contains("epochs")) cfg.net.epochs = s.at("epochs").get<int>();
    if (s.contains("dropout_keep")) cfg.net.dropout_keep = s.at("dropout_keep").get<double>();
  }
  if (j.contains("lrl")) {
    const auto& s = j.at("lrl");
    if (s.contains("n_lambdas")) cfg.lrl.n_lambdas = s.at("n_lambdas").get<int>();
    if (s.contains("lambda_min_ratio")) cfg.lrl.lambda_min_ratio = s.at("lambda_min_ratio").get<double>();
    if (s.contains("cv_folds")) cfg.lrl.cv_folds = s.at("cv_folds").get<int>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

}  // namespace forgenet
