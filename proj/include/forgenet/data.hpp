#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace forgenet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

// Dense sample matrix (rows = samples, columns = features) with binary
// labels and unique feature names.
struct Dataset {
  Matrix x;
  IntVector y;
  std::vector<std::string> feature_names;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

struct SplitPair {
  Dataset train;
  Dataset test;
};

// Per-column mean and sample standard deviation (n-1 denominator).
// Columns with zero deviation normalize to all zeros.
struct Normalization {
  Vector mean;
  Vector sd;
};

// Features file: header row of names, one comma-separated row per sample.
// Labels file: one 0/1 value per line, no header, same row order.
Dataset load_csv(const std::string& features_path, const std::string& labels_path);

void save_csv(const Dataset& d, const std::string& features_path,
              const std::string& labels_path);

Normalization fit_normalization(const Matrix& x);
Matrix apply_normalization(const Matrix& x, const Normalization& norm);

// Column-wise Z-score using statistics of `d` itself. Requires n >= 2.
Dataset zscore(const Dataset& d);

// Per-class test counts are round(class_count * test_fraction) clamped to
// [1, class_count - 1]; assignment is a seeded shuffle within each class.
SplitPair stratified_split(const Dataset& d, double test_fraction,
                           std::uint64_t seed);

}  // namespace forgenet
