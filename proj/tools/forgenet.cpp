// forgeNet command line: synthetic data generation, model training,
// prediction, importance export and the simulation-study harness.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unistd.h>

#include "forgenet/experiment.hpp"
#include "forgenet/num_format.hpp"
#include "forgenet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace forgenet;

namespace {

int cmd_simulate(const SynthSpec& spec, const std::string& out_dir) {
  const SynthOutput out = generate(spec);
  write_synth(out_dir, spec, out);
  std::cout << "wrote " << out_dir << ": p=" << spec.p << " n=" << spec.n
            << " edges=" << out.true_graph.n_edges()
            << " true=" << out.true_predictors.size()
            << " relevant=" << out.relevant.size() << "\n";
  return 0;
}

int cmd_train(const std::string& features, const std::string& labels,
              const std::string& method, const std::string& model_dir,
              std::uint64_t seed, const PipelineConfig& base_cfg,
              bool export_adjacency) {
  PipelineConfig cfg = base_cfg;
  if (method == "forgenet_rf") {
    cfg.forest.kind = ForestKind::RF;
  } else if (method == "forgenet_gbm") {
    cfg.forest.kind = ForestKind::GBM;
  } else {
    std::cerr << "unsupported --method '" << method
              << "' (expected forgenet_rf or forgenet_gbm)\n";
    return 1;
  }
  const Dataset d = load_csv(features, labels);
  std::cout << "loaded " << d.n() << " samples x " << d.p() << " features\n";
  const ForgeNetModel model = fit(d, cfg, seed);
  save_model(model_dir, model);
  if (export_adjacency) {
    save_adjacency_csv((fs::path(model_dir) / "adjacency.csv").string(),
                       model.graph, model.feature_names);
  }
  std::cout << "graph: " << model.graph.size() << " vertices, "
            << model.graph.edges.size() << " edges\n";
  std::cout << "model written to " << model_dir << "\n";
  return 0;
}

int cmd_predict(const std::string& features, const std::string& model_dir,
                const std::string& out_path, bool self_zscore) {
  const ForgeNetModel model = load_model(model_dir);

  // Reuse the CSV reader; prediction needs no labels, so fabricate them.
  const auto tmp_labels =
      fs::temp_directory_path() /
      ("forgenet_predict_labels_" + std::to_string(::getpid()) + ".csv");
  {
    std::ifstream in(features);
    if (!in) {
      std::cerr << "cannot open " << features << "\n";
      return 1;
    }
    std::string line;
    std::getline(in, line);
    std::ofstream lab(tmp_labels);
    while (std::getline(in, line)) {
      if (!line.empty()) lab << "0\n";
    }
  }
  const Dataset d = load_csv(features, tmp_labels.string());
  fs::remove(tmp_labels);

  // Columns are aligned by header name against the training order; columns
  // the graph does not use may be absent.
  const Matrix x = align_for_predict(model, d.x, d.feature_names);
  const Vector probs = predict(model, x, self_zscore);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return 1;
  }
  out << "prob_class1\n";
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    out << format_double(probs(i)) << '\n';
  }
  std::cout << "wrote " << probs.size() << " predictions to " << out_path << "\n";
  return 0;
}

int cmd_importance(const std::string& model_dir, const std::string& out_path) {
  const ForgeNetModel model = load_model(model_dir);
  const ImportanceReport report = feature_importance(model);
  save_importance_csv(out_path, report, model.feature_names);
  std::cout << "wrote importance ranking to " << out_path << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path) {
  ExperimentConfig cfg = load_config(config_path);
  if (cfg.output_dir.empty()) {
    std::cerr << "config must set output_dir\n";
    return 1;
  }
  const ExperimentReport report = run(cfg);
  write_report(cfg, report);
  int failures = 0;
  for (const auto& row : report.rows) {
    if (!row.failure.empty()) {
      ++failures;
      std::cerr << "failure: " << method_name(row.method) << " replicate "
                << row.replicate << ": " << row.failure << "\n";
    }
  }
  std::cout << "wrote " << cfg.output_dir << "/replicates.csv and summary.csv ("
            << report.rows.size() << " rows, " << failures << " failures)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forgeNet: forest graph-embedded deep feedforward networks"};
  app.require_subcommand(1);

  // simulate
  SynthSpec spec;
  std::string sim_out = "synth_out";
  auto* sim = app.add_subcommand("simulate", "generate a synthetic benchmark dataset");
  sim->add_option("--p", spec.p, "feature count");
  sim->add_option("--n", spec.n, "sample count");
  sim->add_option("--cores", spec.n_cores, "number of core hub nodes");
  sim->add_option("--p0", spec.p0, "true predictor count (divisible by cores)");
  sim->add_option("--ba-m", spec.ba_m, "edges per new node in the BA graph");
  sim->add_option("--base-corr", spec.base_corr, "covariance base (0,1)");
  sim->add_option("--beta-range", spec.beta_range, "coefficient range half-width");
  sim->add_option("--seed", spec.seed, "random seed");
  sim->add_option("--out", sim_out, "output directory");

  // train
  std::string features, labels, method = "forgenet_rf", model_dir = "model";
  std::uint64_t seed = 0;
  PipelineConfig pcfg;
  auto* train = app.add_subcommand("train", "fit a forgeNet model from CSV data");
  train->add_option("--features", features, "features CSV (header row)")->required();
  train->add_option("--labels", labels, "labels CSV (one 0/1 per line)")->required();
  train->add_option("--method", method, "forgenet_rf or forgenet_gbm");
  train->add_option("--model-dir", model_dir, "output model directory");
  train->add_option("--seed", seed, "master seed");
  train->add_option("--n-trees", pcfg.forest.rf.n_trees, "trees in the forest");
  train->add_option("--mtry", pcfg.forest.rf.mtry, "features per RF split (0 = sqrt(p))");
  train->add_option("--rf-max-depth", pcfg.forest.rf.max_depth, "RF depth cap (-1 = none)");
  train->add_option("--min-leaf", pcfg.forest.rf.min_leaf, "RF minimum leaf size");
  train->add_option("--gbm-learning-rate", pcfg.forest.gbm.learning_rate, "GBM shrinkage");
  train->add_option("--gbm-max-depth", pcfg.forest.gbm.max_depth, "GBM depth cap");
  train->add_option("--subsample", pcfg.forest.gbm.subsample, "GBM row subsample in (0,1]");
  train->add_option("--hidden-dims", pcfg.net.hidden_dims, "hidden layer sizes");
  train->add_option("--learning-rate", pcfg.net.learning_rate, "Adam learning rate");
  train->add_option("--batch-size", pcfg.net.batch_size, "mini-batch size");
  train->add_option("--epochs", pcfg.net.epochs, "training epochs");
  train->add_option("--dropout-keep", pcfg.net.dropout_keep, "dropout keep probability");
  train->add_flag("--no-normalize", "skip Z-scoring before the forest");
  train->add_flag("--no-self-loops", "leave the adjacency diagonal unset");
  train->add_flag("--export-adjacency", "also write adjacency.csv to the model dir");

  // predict
  std::string pred_features, pred_model_dir = "model", pred_out = "predictions.csv";
  auto* pred = app.add_subcommand("predict", "predict class-1 probabilities");
  pred->add_option("--features", pred_features, "features CSV")->required();
  pred->add_option("--model-dir", pred_model_dir, "model directory");
  pred->add_option("--out", pred_out, "output CSV path");
  pred->add_flag("--self-zscore",
                 "Z-score the incoming data by its own statistics instead of "
                 "the stored training statistics");

  // importance
  std::string imp_model_dir = "model", imp_out = "importance.csv";
  auto* imp = app.add_subcommand("importance", "export feature importance scores");
  imp->add_option("--model-dir", imp_model_dir, "model directory");
  imp->add_option("--out", imp_out, "output CSV path");

  // experiment
  std::string config_path;
  auto* exp = app.add_subcommand("experiment", "run the simulation study harness");
  exp->add_option("--config", config_path, "experiment config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(spec, sim_out);
    if (train->parsed()) {
      pcfg.forest.gbm.n_trees = pcfg.forest.rf.n_trees;
      pcfg.normalize = train->count("--no-normalize") == 0;
      pcfg.self_loops = train->count("--no-self-loops") == 0;
      return cmd_train(features, labels, method, model_dir, seed, pcfg,
                       train->count("--export-adjacency") > 0);
    }
    if (pred->parsed()) {
      return cmd_predict(pred_features, pred_model_dir, pred_out,
                         pred->count("--self-zscore") > 0);
    }
    if (imp->parsed()) return cmd_importance(imp_model_dir, imp_out);
    if (exp->parsed()) return cmd_experiment(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
