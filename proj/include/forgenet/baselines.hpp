#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forgenet/data.hpp"

namespace forgenet {

struct LinearModel {
  Vector coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
};

// Lasso-penalized logistic regression objective for one lambda:
// mean negative log-likelihood + lambda * ||beta||_1, intercept unpenalized.
// Solved by proximal gradient descent with fixed step 1/L,
// L = ||[1 X]||_2^2 / (4n).
struct LassoFit {
  Vector beta;
  double intercept = 0.0;
  int iterations = 0;
  double objective = 0.0;
};

LassoFit fit_lasso_logistic(const Matrix& x, const IntVector& y, double lambda,
                            const Vector* beta_init = nullptr,
                            double intercept_init = 0.0,
                            double tol = 1e-7, int max_iter = 10000,
                            std::vector<double>* objective_trace = nullptr);

// 50 log-spaced values from lambda_max = max|X^T (y - ybar)| / n down to
// lambda_max * 1e-4.
std::vector<double> default_lambda_grid(const Matrix& x, const IntVector& y,
                                        int n_lambdas = 50,
                                        double min_ratio = 1e-4);

// Chooses lambda by stratified cross-validation maximizing validation
// ROC-AUC (ties resolved toward the larger lambda), then refits on all data.
// Warns on stderr if the features do not look standardized.
LinearModel train_lrl(const Dataset& d, const std::vector<double>& lambdas,
                      int cv_folds, std::uint64_t seed);

Vector lrl_predict(const LinearModel& m, const Matrix& x);

std::vector<int> lrl_selected(const LinearModel& m);

double soft_threshold(double value, double threshold);

// CSV of the nonzero support: feature_name, coefficient.
void save_selected_csv(const std::string& path, const LinearModel& m,
                       const std::vector<std::string>& feature_names);

nlohmann::json linear_model_to_json(const LinearModel& m);
LinearModel linear_model_from_json(const nlohmann::json& j);

}  // namespace forgenet
