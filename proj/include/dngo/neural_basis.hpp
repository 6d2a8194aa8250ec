#pragma once

#include "dngo/domain.hpp"

#include <cstdint>
#include <vector>

namespace dngo {

enum class Activation {
  tanh_all,        ///< tanh on every hidden layer (bounded basis, the default)
  relu_then_tanh,  ///< ReLU on all hidden layers except the last, which is tanh
  relu_all,        ///< ReLU everywhere (unbounded basis)
};

/// Loss of the scalar training head.
enum class HeadLoss {
  squared_error,  ///< regression on standardized targets
  logistic,       ///< cross-entropy on 0/1 labels (constraint network)
};

struct NetworkConfig {
  std::vector<int> layer_widths{50, 50, 50};
  Activation activation = Activation::tanh_all;
  double l2_penalty = 1e-4;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 1000;
  int batch_size = 64;
  /// Datasets up to this size train full-batch; larger ones use mini-batches.
  int full_batch_limit = 200;

  void validate() const;
  int feature_dim() const { return layer_widths.empty() ? 0 : layer_widths.back(); }
};

/// Weights and biases of the hidden stack plus the linear training head.
/// The same shape is used for gradients and momentum buffers.
struct NetworkParams {
  std::vector<Matrix> weights;  // weights[l] is (out x in)
  std::vector<Vector> biases;
  Vector head_weights;
  double head_bias = 0.0;

  NetworkParams zeros_like() const;
  std::size_t count() const;
  /// Sum of squared weights (biases excluded), the quantity the l2 penalty scales.
  double weight_sq_norm() const;

  Vector flatten() const;
  void assign(const Vector& flat);
};

/// Classical momentum update: v <- momentum*v - lr*g; w <- w + v.
template <typename T>
void momentum_update(T& w, T& v, const T& g, double lr, double momentum) {
  v = momentum * v - lr * g;
  w += v;
}

void momentum_update(NetworkParams& w, NetworkParams& v, const NetworkParams& g, double lr, double momentum);

class BasisNetwork {
 public:
  BasisNetwork(NetworkConfig config, int input_dim, NetworkParams params);

  /// Gaussian weights with std 1/sqrt(fan_in), zero biases. Deterministic in `seed`.
  static BasisNetwork initialize(const NetworkConfig& config, int input_dim, std::uint64_t seed);

  int input_dim() const noexcept { return input_dim_; }
  int feature_dim() const noexcept { return config_.feature_dim(); }
  const NetworkConfig& config() const noexcept { return config_; }
  const NetworkParams& params() const noexcept { return params_; }
  NetworkParams& mutable_params() noexcept { return params_; }

  /// phi(x) in R^D, the last hidden layer.
  Vector features(const Vector& x) const;
  /// Rows of X are inputs; returns the N x D design matrix.
  Matrix features(const Matrix& X) const;
  /// Output of the training head (pre-sigmoid for the logistic head).
  Vector head_output(const Matrix& X) const;

 private:
  NetworkConfig config_;
  int input_dim_;
  NetworkParams params_;
};

struct LossGradient {
  double loss = 0.0;
  NetworkParams gradient;
};

/// Mean data loss of the head plus l2 * (sum of squared weights), and its gradient
/// by backpropagation. Rows of X are inputs.
LossGradient loss_and_gradient(const BasisNetwork& net, const Matrix& X, const Vector& y, double l2,
                               HeadLoss loss = HeadLoss::squared_error);

struct TrainingResult {
  BasisNetwork network;
  /// Data loss (MSE or mean cross-entropy) of the trained head on the full data.
  double final_loss;
};

/// MAP training by SGD with momentum, from a fresh initialization.
/// Targets are used as given; callers standardize them first.
TrainingResult train_map(const NetworkConfig& config, const Matrix& X, const Vector& y, std::uint64_t seed,
                         HeadLoss loss = HeadLoss::squared_error);

}  // namespace dngo
