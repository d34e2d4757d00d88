#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forgenet/data.hpp"
#include "forgenet/rng.hpp"

namespace forgenet {

struct NetConfig {
  std::vector<int> hidden_dims{64, 16};  // layers after the graph-embedded one
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 100;
  double dropout_keep = 0.9;  // inverted dropout on hidden activations
  std::uint64_t seed = 0;
};

struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<Vector> m_b, v_b;
  long step = 0;
};

// Feedforward net whose first weight matrix is elementwise-gated by a binary
// adjacency mask: Z1 = relu(X (W_in ⊙ A) + b_in), then dense relu layers and
// a 2-way softmax output. Masked entries of weights[0] are exactly zero at
// all times.
struct MaskedNet {
  Matrix mask;                  // |V| x |V|
  std::vector<Matrix> weights;  // [0] = W_in, then hidden layers, last = W_out
  std::vector<Vector> biases;
  NetConfig config;
  AdamState adam;

  int input_dim() const { return static_cast<int>(mask.rows()); }
};

struct Gradients {
  std::vector<Matrix> w;
  std::vector<Vector> b;
};

// He-style fan-in uniform initialization; the graph-embedded layer's fan-in
// per neuron is its mask nonzero count, so sparse columns are not
// under-scaled. Biases start at zero.
MaskedNet init(const Matrix& mask, const NetConfig& cfg);

// Eval-mode forward pass: n x 2 row-softmax probabilities.
Matrix forward(const MaskedNet& net, const Matrix& x);

// Mean cross-entropy over the batch plus backprop gradients. The gradient of
// weights[0] is multiplied by the mask. With dropout_rng non-null and
// dropout_keep < 1, inverted dropout is applied to hidden activations.
double loss_and_grads(const MaskedNet& net, const Matrix& batch_x,
                      const IntVector& batch_y, Gradients& grads,
                      Rng* dropout_rng = nullptr);

// Adam with beta1=0.9, beta2=0.999, eps=1e-8 and bias correction; the mask
// is reapplied to weights[0] after the update.
void adam_step(MaskedNet& net, const Gradients& grads, double lr);

// Mini-batch training; returns the per-epoch mean training loss.
std::vector<double> train(MaskedNet& net, const Dataset& d, const NetConfig& cfg);

// Class-1 probabilities (second softmax column of the eval forward pass).
Vector predict(const MaskedNet& net, const Matrix& x);

nlohmann::json net_to_json(const MaskedNet& net);
MaskedNet net_from_json(const nlohmann::json& j);
void save_net(const MaskedNet& net, const std::string& path);
MaskedNet load_net(const std::string& path);

}  // namespace forgenet
