#include "forgenet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "forgenet/metrics.hpp"
#include "forgenet/num_format.hpp"
#include "forgenet/rng.hpp"

namespace forgenet {

namespace {

Vector sigmoid(const Vector& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Mean negative log-likelihood; probabilities clamped away from 0/1.
double nll(const Matrix& x, const IntVector& y, const Vector& beta, double b0) {
  const Vector z = (x * beta).array() + b0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // log(1 + exp(-t)) for t = z when y=1, -z when y=0, computed stably
    const double t = y(i) == 1 ? z(i) : -z(i);
    acc += t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
  }
  return acc / static_cast<double>(y.size());
}

// Squared spectral norm of [1 X] by power iteration on the Gram operator.
double squared_spectral_norm_augmented(const Matrix& x) {
  const auto n = x.rows();
  Vector v = Vector::Ones(x.cols() + 1).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    // w = A v with A = [1 X]
    Vector w = x * v.tail(x.cols());
    w.array() += v(0);
    Vector next(x.cols() + 1);
    next(0) = w.sum();
    next.tail(x.cols()) = x.transpose() * w;
    const double norm = next.norm();
    if (norm == 0.0) return 1.0;
    next /= norm;
    const double new_lambda = norm;
    if (std::abs(new_lambda - lambda) <= 1e-12 * std::max(1.0, new_lambda)) {
      lambda = new_lambda;
      v = next;
      break;
    }
    lambda = new_lambda;
    v = next;
  }
  (void)n;
  return lambda * 1.01;  // safety margin keeps the step below 1/L
}

}  // namespace

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

LassoFit fit_lasso_logistic(const Matrix& x, const IntVector& y, double lambda,
                            const Vector* beta_init, double intercept_init,
                            double tol, int max_iter,
                            std::vector<double>* objective_trace) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  const auto n = static_cast<double>(x.rows());

  LassoFit fit;
  fit.beta = beta_init ? *beta_init : Vector::Zero(x.cols());
  fit.intercept = intercept_init;

  const double lipschitz = squared_spectral_norm_augmented(x) / (4.0 * n);
  const double step = 1.0 / lipschitz;

  double obj = nll(x, y, fit.beta, fit.intercept) + lambda * fit.beta.cwiseAbs().sum();
  if (objective_trace) objective_trace->push_back(obj);

  for (int it = 0; it < max_iter; ++it) {
    const Vector z = (x * fit.beta).array() + fit.intercept;
    const Vector q = sigmoid(z);
    Vector resid(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) resid(i) = q(i) - y(i);

    const Vector grad_beta = x.transpose() * resid / n;
    const double grad_b0 = resid.sum() / n;

    fit.intercept -= step * grad_b0;
    const double thr = step * lambda;
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
      fit.beta(j) = soft_threshold(fit.beta(j) - step * grad_beta(j), thr);
    }

    const double new_obj =
        nll(x, y, fit.beta, fit.intercept) + lambda * fit.beta.cwiseAbs().sum();
    if (objective_trace) objective_trace->push_back(new_obj);
    fit.iterations = it + 1;
    if (std::abs(obj - new_obj) <= tol * std::max(1.0, std::abs(obj))) {
      obj = new_obj;
      break;
    }
    obj = new_obj;
  }
  fit.objective = obj;
  return fit;
}

std::vector<double> default_lambda_grid(const Matrix& x, const IntVector& y,
                                        int n_lambdas, double min_ratio) {
  const auto n = static_cast<double>(x.rows());
  const double ybar = y.cast<double>().mean();
  Vector centered(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) centered(i) = y(i) - ybar;
  const double lambda_max = (x.transpose() * centered).cwiseAbs().maxCoeff() / n;
  std::vector<double> grid(static_cast<std::size_t>(n_lambdas));
  const double log_max = std::log(lambda_max);
  const double log_min = std::log(lambda_max * min_ratio);
  for (int i = 0; i < n_lambdas; ++i) {
    const double t = n_lambdas == 1 ? 0.0
                                    : static_cast<double>(i) / (n_lambdas - 1);
    grid[static_cast<std::size_t>(i)] = std::exp(log_max + t * (log_min - log_max));
  }
  return grid;
}

LinearModel train_lrl(const Dataset& d, const std::vector<double>& lambdas,
                      int cv_folds, std::uint64_t seed) {
  if (lambdas.empty()) throw std::invalid_argument("lambda grid is empty");
  if (cv_folds < 2) throw std::invalid_argument("cv_folds must be at least 2");
  const auto n_pos = (d.y.array() == 1).count();
  if (n_pos == 0 || n_pos == d.n()) {
    throw std::invalid_argument("train_lrl requires both classes");
  }

  const auto means = d.x.colwise().mean();
  if (means.cwiseAbs().maxCoeff() > 0.1) {
    std::cerr << "warning: train_lrl expects standardized features "
                 "(max |column mean| = "
              << means.cwiseAbs().maxCoeff() << ")\n";
  }

  // Stratified fold assignment: per class, shuffled round-robin.
  std::vector<int> fold(static_cast<std::size_t>(d.n()), 0);
  Rng rng(seed);
  for (int c = 0; c < 2; ++c) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      if (d.y(i) == c) idx.push_back(i);
    }
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      fold[static_cast<std::size_t>(idx[k])] = static_cast<int>(k) % cv_folds;
    }
  }

  // Mean validation AUC per lambda, with warm starts down the path.
  std::vector<double> auc_sum(lambdas.size(), 0.0);
  std::vector<int> auc_count(lambdas.size(), 0);
  for (int k = 0; k < cv_folds; ++k) {
    std::vector<Eigen::Index> tr, va;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      (fold[static_cast<std::size_t>(i)] == k ? va : tr).push_back(i);
    }
    if (tr.empty() || va.empty()) continue;
    Matrix xtr(static_cast<Eigen::Index>(tr.size()), d.p());
    IntVector ytr(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = d.x.row(tr[i]);
      ytr(static_cast<Eigen::Index>(i)) = d.y(tr[i]);
    }
    Matrix xva(static_cast<Eigen::Index>(va.size()), d.p());
    IntVector yva(static_cast<Eigen::Index>(va.size()));
    for (std::size_t i = 0; i < va.size(); ++i) {
      xva.row(static_cast<Eigen::Index>(i)) = d.x.row(va[i]);
      yva(static_cast<Eigen::Index>(i)) = d.y(va[i]);
    }
    const bool va_two_class =
        (yva.array() == 1).any() && (yva.array() == 0).any();

    Vector warm = Vector::Zero(d.p());
    double warm_b0 = 0.0;
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      const auto fit = fit_lasso_logistic(xtr, ytr, lambdas[li], &warm, warm_b0);
      warm = fit.beta;
      warm_b0 = fit.intercept;
      if (!va_two_class) continue;
      const Vector scores = sigmoid(((xva * fit.beta).array() + fit.intercept).matrix());
      auc_sum[li] += roc_auc(scores, yva);
      auc_count[li] += 1;
    }
  }

  std::size_t best = 0;
  double best_auc = -1.0;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    if (auc_count[li] == 0) continue;
    const double mean_auc = auc_sum[li] / auc_count[li];
    if (mean_auc > best_auc) {  // ties keep the earlier (larger) lambda
      best_auc = mean_auc;
      best = li;
    }
  }

  // Final fit on all data, warm-started down the path to the chosen lambda.
  Vector warm = Vector::Zero(d.p());
  double warm_b0 = 0.0;
  LassoFit final_fit;
  for (std::size_t li = 0; li <= best; ++li) {
    final_fit = fit_lasso_logistic(d.x, d.y, lambdas[li], &warm, warm_b0);
    warm = final_fit.beta;
    warm_b0 = final_fit.intercept;
  }

  LinearModel model;
  model.coefficients = final_fit.beta;
  model.intercept = final_fit.intercept;
  model.lambda = lambdas[best];
  return model;
}

Vector lrl_predict(const LinearModel& m, const Matrix& x) {
  if (x.cols() != m.coefficients.size()) {
    throw std::invalid_argument("feature count mismatch in lrl_predict");
  }
  return sigmoid(((x * m.coefficients).array() + m.intercept).matrix());
}

std::vector<int> lrl_selected(const LinearModel& m) {
  std::vector<int> out;
  for (Eigen::Index j = 0; j < m.coefficients.size(); ++j) {
    if (m.coefficients(j) != 0.0) out.push_back(static_cast<int>(j));
  }
  return out;
}

void save_selected_csv(const std::string& path, const LinearModel& m,
                       const std::vector<std::string>& feature_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "feature_name,coefficient\n";
  for (int j : lrl_selected(m)) {
    const std::string name = feature_names.empty()
                                 ? "f" + std::to_string(j)
                                 : feature_names[static_cast<std::size_t>(j)];
    out << name << ',' << format_double(m.coefficients(j)) << '\n';
  }
}

nlohmann::json linear_model_to_json(const LinearModel& m) {
  nlohmann::json j;
  j["coefficients"] = std::vector<double>(
      m.coefficients.data(), m.coefficients.data() + m.coefficients.size());
  j["intercept"] = m.intercept;
  j["lambda"] = m.lambda;
  return j;
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
  LinearModel m;
  const auto coefs = j.at("coefficients").get<std::vector<double>>();
  m.coefficients = Eigen::Map<const Vector>(coefs.data(),
                                            static_cast<Eigen::Index>(coefs.size()));
  m.intercept = j.at("intercept").get<double>();
  m.lambda = j.at("lambda").get<double>();
  return m;
}

}  // namespace forgenet
