#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forgenet/pipeline.hpp"
#include "forgenet/synth.hpp"

namespace forgenet {

enum class Method {
  ForgenetRf = 0,
  ForgenetGbm = 1,
  Rf = 2,
  Gbm = 3,
  Lrl = 4,
  GedfnTrue = 5,
  GedfnMis = 6,
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct LrlParams {
  int n_lambdas = 50;
  double lambda_min_ratio = 1e-4;
  int cv_folds = 5;
};

struct ExperimentConfig {
  SynthSpec synth;
  int replicates = 10;
  double test_fraction = 0.2;
  std::vector<Method> methods{Method::ForgenetRf, Method::ForgenetGbm,
                              Method::Rf,         Method::Gbm,
                              Method::Lrl,        Method::GedfnTrue,
                              Method::GedfnMis};
  std::string output_dir;
  std::uint64_t master_seed = 0;
  RfParams rf;
  GbmParams gbm;
  NetConfig net;
  LrlParams lrl;
  int threads = 0;  // 0 selects min(hardware, replicates)
};

struct ReplicateResult {
  Method method = Method::Rf;
  int replicate = 0;
  std::optional<double> roc_auc;
  std::optional<double> feature_pr_auc;
  std::optional<double> recall_at_lrl_precision;
  bool recall_excluded = false;  // LRL selected nothing, see summarize
  std::optional<double> lrl_precision;
  double relevant_fraction = 0.0;
  double runtime_seconds = 0.0;
  std::string failure;  // empty on success
};

struct ExperimentReport {
  std::vector<ReplicateResult> rows;  // replicate-major, methods in config order
};

// One synthetic dataset and split per replicate, derived from
// (master_seed, replicate) only, so every method sees identical data.
// Per-method failures are recorded and do not stop the run.
ExperimentReport run(const ExperimentConfig& cfg);

struct SummaryRow {
  std::string method;
  std::string metric;
  double mean = 0.0;
  double se = 0.0;  // sd / sqrt(r); 0 when only one replicate contributed
  int n = 0;
  std::string note;
};

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg,
                                  const ExperimentReport& report);

// Writes replicates.csv, summary.csv and manifest.json. summary.csv contains
// only seed-determined values, so repeated runs are byte-identical.
void write_report(const ExperimentConfig& cfg, const ExperimentReport& report);

ExperimentReport read_replicates_csv(const std::string& path);

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace forgenet
