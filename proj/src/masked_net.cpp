#include "forgenet/masked_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace forgenet {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kProbFloor = 1e-12;

// Separate sub-streams of the config seed for initialization and training.
constexpr std::uint64_t kInitStream = 0x696e6974;   // "init"
constexpr std::uint64_t kTrainStream = 0x7472616e;  // "tran"

void validate_config(const NetConfig& cfg) {
  for (int h : cfg.hidden_dims) {
    if (h <= 0) throw std::invalid_argument("hidden_dims entries must be positive");
  }
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (cfg.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (cfg.dropout_keep <= 0.0 || cfg.dropout_keep > 1.0) {
    throw std::invalid_argument("dropout_keep must lie in (0, 1]");
  }
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

struct ForwardCache {
  std::vector<Matrix> activations;    // activations[0] = x, then hidden outputs
  std::vector<Matrix> relu_masks;     // 1 where the pre-activation was > 0
  std::vector<Matrix> dropout_scale;  // 0 or 1/keep; empty when not training
  Matrix probs;
};

void forward_pass(const MaskedNet& net, const Matrix& x, bool train_mode,
                  Rng* dropout_rng, ForwardCache& cache) {
  if (x.cols() != net.mask.cols()) {
    throw std::invalid_argument("input has " + std::to_string(x.cols()) +
                                " columns, mask expects " +
                                std::to_string(net.mask.cols()));
  }
  const auto n_layers = net.weights.size();  // hidden layers + output
  const bool use_dropout =
      train_mode && dropout_rng != nullptr && net.config.dropout_keep < 1.0;

  cache.activations.assign(1, x);
  cache.relu_masks.clear();
  cache.dropout_scale.clear();

  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    // The graph-embedded layer applies the Hadamard gate explicitly, so the
    // loss is constant in masked coordinates.
    Matrix z;
    if (l == 0) {
      z = cache.activations.back() * net.weights[0].cwiseProduct(net.mask);
    } else {
      z = cache.activations.back() * net.weights[l];
    }
    z.rowwise() += net.biases[l].transpose();
    Matrix a = z.cwiseMax(0.0);
    cache.relu_masks.push_back((z.array() > 0.0).cast<double>().matrix());
    if (use_dropout) {
      const double keep = net.config.dropout_keep;
      Matrix scale(a.rows(), a.cols());
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
          scale(i, j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        }
      }
      a = a.cwiseProduct(scale);
      cache.dropout_scale.push_back(std::move(scale));
    }
    cache.activations.push_back(std::move(a));
  }

  Matrix logits = cache.activations.back() * net.weights.back();
  logits.rowwise() += net.biases.back().transpose();
  if (!logits.allFinite()) {
    throw std::runtime_error("non-finite activations in forward pass (divergence)");
  }
  cache.probs = softmax_rows(logits);
}

}  // namespace

MaskedNet init(const Matrix& mask, const NetConfig& cfg) {
  if (mask.rows() != mask.cols()) throw std::invalid_argument("mask must be square");
  validate_config(cfg);

  MaskedNet net;
  net.mask = mask;
  net.config = cfg;
  Rng rng(derive_seed(cfg.seed, kInitStream));

  const auto v = static_cast<int>(mask.rows());
  std::vector<int> dims;
  dims.push_back(v);  // graph-embedded layer width
  for (int h : cfg.hidden_dims) dims.push_back(h);
  dims.push_back(2);

  // Graph-embedded layer: per-neuron fan-in from the mask.
  Matrix w_in = Matrix::Zero(v, v);
  for (int j = 0; j < v; ++j) {
    const double fan_in = std::max(1.0, mask.col(j).sum());
    const double limit = std::sqrt(6.0 / fan_in);
    for (int i = 0; i < v; ++i) {
      if (mask(i, j) != 0.0) w_in(i, j) = rng.uniform(-limit, limit);
    }
  }
  net.weights.push_back(std::move(w_in));
  net.biases.emplace_back(Vector::Zero(v));

  // Dense layers: dims[l] -> dims[l+1] for the hidden stack and the output.
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in_dim = dims[l];
    const int out_dim = dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in_dim));
    Matrix w(in_dim, out_dim);
    for (int j = 0; j < out_dim; ++j) {
      for (int i = 0; i < in_dim; ++i) w(i, j) = rng.uniform(-limit, limit);
    }
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(Vector::Zero(out_dim));
  }

  net.adam.m_w.clear();
  net.adam.v_w.clear();
  net.adam.m_b.clear();
  net.adam.v_b.clear();
  for (const auto& w : net.weights) {
    net.adam.m_w.push_back(Matrix::Zero(w.rows(), w.cols()));
    net.adam.v_w.push_back(Matrix::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : net.biases) {
    net.adam.m_b.push_back(Vector::Zero(b.size()));
    net.adam.v_b.push_back(Vector::Zero(b.size()));
  }
  net.adam.step = 0;
  return net;
}

Matrix forward(const MaskedNet& net, const Matrix& x) {
  ForwardCache cache;
  forward_pass(net, x, false, nullptr, cache);
  return cache.probs;
}

double loss_and_grads(const MaskedNet& net, const Matrix& batch_x,
                      const IntVector& batch_y, Gradients& grads,
                      Rng* dropout_rng) {
  const auto b = batch_x.rows();
  if (b == 0 || batch_y.size() != b) {
    throw std::invalid_argument("batch must be non-empty with matching labels");
  }

  ForwardCache cache;
  forward_pass(net, batch_x, true, dropout_rng, cache);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    loss -= std::log(std::max(cache.probs(i, batch_y(i)), kProbFloor));
  }
  loss /= static_cast<double>(b);

  grads.w.resize(net.weights.size());
  grads.b.resize(net.biases.size());

  // Softmax + cross-entropy gradient.
  Matrix delta = cache.probs;
  for (Eigen::Index i = 0; i < b; ++i) delta(i, batch_y(i)) -= 1.0;
  delta /= static_cast<double>(b);

  for (auto l = static_cast<std::ptrdiff_t>(net.weights.size()) - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    grads.w[lu] = cache.activations[lu].transpose() * delta;
    grads.b[lu] = delta.colwise().sum();
    if (l > 0) {
      Matrix da = delta * net.weights[lu].transpose();
      if (!cache.dropout_scale.empty()) {
        da = da.cwiseProduct(cache.dropout_scale[lu - 1]);
      }
      delta = da.cwiseProduct(cache.relu_masks[lu - 1]);
    }
  }
  grads.w[0] = grads.w[0].cwiseProduct(net.mask);
  return loss;
}

void adam_step(MaskedNet& net, const Gradients& grads, double lr) {
  if (grads.w.size() != net.weights.size() || grads.b.size() != net.biases.size()) {
    throw std::invalid_argument("gradient shapes do not match the network");
  }
  auto& st = net.adam;
  st.step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(st.step));

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    st.m_w[l] = kAdamBeta1 * st.m_w[l] + (1.0 - kAdamBeta1) * grads.w[l];
    st.v_w[l] = kAdamBeta2 * st.v_w[l] +
                (1.0 - kAdamBeta2) * grads.w[l].cwiseProduct(grads.w[l]);
    const Matrix m_hat = st.m_w[l] / bc1;
    const Matrix v_hat = st.v_w[l] / bc2;
    net.weights[l].array() -=
        lr * m_hat.array() / (v_hat.array().sqrt() + kAdamEps);
  }
  for (std::size_t l = 0; l < net.biases.size(); ++l) {
    st.m_b[l] = kAdamBeta1 * st.m_b[l] + (1.0 - kAdamBeta1) * grads.b[l];
    st.v_b[l] = kAdamBeta2 * st.v_b[l] +
                (1.0 - kAdamBeta2) * grads.b[l].cwiseProduct(grads.b[l]);
    const Vector m_hat = st.m_b[l] / bc1;
    const Vector v_hat = st.v_b[l] / bc2;
    net.biases[l].array() -=
        lr * m_hat.array() / (v_hat.array().sqrt() + kAdamEps);
  }
  net.weights[0] = net.weights[0].cwiseProduct(net.mask);
}

std::vector<double> train(MaskedNet& net, const Dataset& d, const NetConfig& cfg) {
  validate_config(cfg);
  if (d.n() < 1) throw std::invalid_argument("training data is empty");
  if (d.p() != net.mask.rows()) {
    throw std::invalid_argument("dataset must be reduced to the mask dimension");
  }
  Rng rng(derive_seed(cfg.seed, kTrainStream));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d.n()));
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(cfg.epochs));
  Gradients grads;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    Eigen::Index start = 0;
    int step_in_epoch = 0;
    while (start < d.n()) {
      const Eigen::Index bsize = std::min<Eigen::Index>(cfg.batch_size, d.n() - start);
      Matrix bx(bsize, d.p());
      IntVector by(bsize);
      for (Eigen::Index i = 0; i < bsize; ++i) {
        bx.row(i) = d.x.row(order[static_cast<std::size_t>(start + i)]);
        by(i) = d.y(order[static_cast<std::size_t>(start + i)]);
      }
      double loss;
      try {
        loss = loss_and_grads(net, bx, by, grads, &rng);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(step_in_epoch));
      }
      adam_step(net, grads, cfg.learning_rate);
      epoch_loss += loss * static_cast<double>(bsize);
      start += bsize;
      step_in_epoch += 1;
    }
    trace.push_back(epoch_loss / static_cast<double>(d.n()));
  }
  return trace;
}

Vector predict(const MaskedNet& net, const Matrix& x) {
  return forward(net, x).col(1);
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index jj = 0; jj < cols; ++jj) {
      m(i, jj) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(jj)).get<double>();
    }
  }
  return m;
}

}  // namespace

nlohmann::json net_to_json(const MaskedNet& net) {
  nlohmann::json j;
  j["version"] = "forgenet-net-v1";
  j["config"] = {{"hidden_dims", net.config.hidden_dims},
                 {"learning_rate", net.config.learning_rate},
                 {"batch_size", net.config.batch_size},
                 {"epochs", net.config.epochs},
                 {"dropout_keep", net.config.dropout_keep},
                 {"seed", net.config.seed}};
  j["dim"] = net.mask.rows();
  auto& mask_entries = j["mask"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < net.mask.rows(); ++i) {
    for (Eigen::Index jj = 0; jj < net.mask.cols(); ++jj) {
      if (net.mask(i, jj) != 0.0) mask_entries.push_back({i, jj});
    }
  }
  auto& weights = j["weights"] = nlohmann::json::array();
  for (const auto& w : net.weights) weights.push_back(matrix_to_json(w));
  auto& biases = j["biases"] = nlohmann::json::array();
  for (const auto& b : net.biases) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) arr.push_back(b(i));
    biases.push_back(std::move(arr));
  }
  return j;
}

MaskedNet net_from_json(const nlohmann::json& j) {
  if (j.at("version").get<std::string>() != "forgenet-net-v1") {
    throw std::runtime_error("unsupported net serialization version");
  }
  MaskedNet net;
  const auto& cfg = j.at("config");
  net.config.hidden_dims = cfg.at("hidden_dims").get<std::vector<int>>();
  net.config.learning_rate = cfg.at("learning_rate").get<double>();
  net.config.batch_size = cfg.at("batch_size").get<int>();
  net.config.epochs = cfg.at("epochs").get<int>();
  net.config.dropout_keep = cfg.at("dropout_keep").get<double>();
  net.config.seed = cfg.at("seed").get<std::uint64_t>();

  const auto dim = j.at("dim").get<Eigen::Index>();
  net.mask = Matrix::Zero(dim, dim);
  for (const auto& e : j.at("mask")) {
    net.mask(e.at(0).get<Eigen::Index>(), e.at(1).get<Eigen::Index>()) = 1.0;
  }
  for (const auto& w : j.at("weights")) net.weights.push_back(matrix_from_json(w));
  for (const auto& b : j.at("biases")) {
    Vector v(static_cast<Eigen::Index>(b.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v(i) = b.at(static_cast<std::size_t>(i)).get<double>();
    }
    net.biases.push_back(std::move(v));
  }
  if (net.weights.size() < 2 || net.biases.size() != net.weights.size() ||
      net.weights[0].rows() != dim || net.weights[0].cols() != dim ||
      net.weights.back().cols() != 2) {
    throw std::runtime_error("net serialization has inconsistent layer shapes");
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (net.biases[l].size() != net.weights[l].cols() ||
        (l > 0 && net.weights[l].rows() != net.weights[l - 1].cols())) {
      throw std::runtime_error("net serialization has inconsistent layer shapes");
    }
  }

  for (const auto& w : net.weights) {
    net.adam.m_w.push_back(Matrix::Zero(w.rows(), w.cols()));
    net.adam.v_w.push_back(Matrix::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : net.biases) {
    net.adam.m_b.push_back(Vector::Zero(b.size()));
    net.adam.v_b.push_back(Vector::Zero(b.size()));
  }
  return net;
}

void save_net(const MaskedNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << net_to_json(net).dump() << '\n';
}

MaskedNet load_net(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j;
  in >> j;
  return net_from_json(j);
}

}  // namespace forgenet
