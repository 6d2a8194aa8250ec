#include "dngo/neural_basis.hpp"

#include "dngo/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dngo {

void NetworkConfig::validate() const {
  if (layer_widths.empty()) throw std::invalid_argument("network needs at least one hidden layer");
  for (int w : layer_widths) {
    if (w <= 0) throw std::invalid_argument("hidden layer widths must be positive");
  }
  if (!(l2_penalty >= 0.0)) throw std::invalid_argument("l2_penalty must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (full_batch_limit < 0) throw std::invalid_argument("full_batch_limit must be >= 0");
}

NetworkParams NetworkParams::zeros_like() const {
  NetworkParams z;
  for (const auto& w : weights) z.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : biases) z.biases.push_back(Vector::Zero(b.size()));
  z.head_weights = Vector::Zero(head_weights.size());
  z.head_bias = 0.0;
  return z;
}

std::size_t NetworkParams::count() const {
  std::size_t n = static_cast<std::size_t>(head_weights.size()) + 1;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

double NetworkParams::weight_sq_norm() const {
  double s = head_weights.squaredNorm();
  for (const auto& w : weights) s += w.squaredNorm();
  return s;
}

Vector NetworkParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(count()));
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(pos, weights[l].size()) = weights[l].reshaped();
    pos += weights[l].size();
    flat.segment(pos, biases[l].size()) = biases[l];
    pos += biases[l].size();
  }
  flat.segment(pos, head_weights.size()) = head_weights;
  pos += head_weights.size();
  flat[pos] = head_bias;
  return flat;
}

void NetworkParams::assign(const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(count())) throw std::invalid_argument("flat parameter size mismatch");
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].reshaped() = flat.segment(pos, weights[l].size());
    pos += weights[l].size();
    biases[l] = flat.segment(pos, biases[l].size());
    pos += biases[l].size();
  }
  head_weights = flat.segment(pos, head_weights.size());
  pos += head_weights.size();
  head_bias = flat[pos];
}

void momentum_update(NetworkParams& w, NetworkParams& v, const NetworkParams& g, double lr, double momentum) {
  for (std::size_t l = 0; l < w.weights.size(); ++l) {
    momentum_update(w.weights[l], v.weights[l], g.weights[l], lr, momentum);
    momentum_update(w.biases[l], v.biases[l], g.biases[l], lr, momentum);
  }
  momentum_update(w.head_weights, v.head_weights, g.head_weights, lr, momentum);
  momentum_update(w.head_bias, v.head_bias, g.head_bias, lr, momentum);
}

namespace {

bool uses_tanh(Activation act, std::size_t layer, std::size_t n_layers) {
  switch (act) {
    case Activation::tanh_all:
      return true;
    case Activation::relu_all:
      return false;
    case Activation::relu_then_tanh:
      return layer + 1 == n_layers;
  }
  return true;
}

// Hidden activations of every layer; acts[0] is the input.
std::vector<Matrix> forward_all(const NetworkConfig& cfg, const NetworkParams& p, const Matrix& X) {
  std::vector<Matrix> acts;
  acts.reserve(p.weights.size() + 1);
  acts.push_back(X);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    Matrix z = acts.back() * p.weights[l].transpose();
    z.rowwise() += p.biases[l].transpose();
    if (uses_tanh(cfg.activation, l, p.weights.size())) {
      acts.push_back(z.array().tanh().matrix());
    } else {
      acts.push_back(z.cwiseMax(0.0));
    }
  }
  return acts;
}

void check_finite(const Matrix& X, const Vector& y) {
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("training data must be finite");
}

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

}  // namespace

BasisNetwork::BasisNetwork(NetworkConfig config, int input_dim, NetworkParams params)
    : config_(std::move(config)), input_dim_(input_dim), params_(std::move(params)) {
  config_.validate();
  if (input_dim_ < 1) throw std::invalid_argument("network input dimension must be >= 1");
  const auto& widths = config_.layer_widths;
  if (params_.weights.size() != widths.size() || params_.biases.size() != widths.size()) {
    throw std::invalid_argument("parameter layer count does not match config");
  }
  int fan_in = input_dim_;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    if (params_.weights[l].rows() != widths[l] || params_.weights[l].cols() != fan_in ||
        params_.biases[l].size() != widths[l]) {
      throw std::invalid_argument("parameter shape does not match config at layer " + std::to_string(l));
    }
    fan_in = widths[l];
  }
  if (params_.head_weights.size() != fan_in) throw std::invalid_argument("head weight size mismatch");
}

BasisNetwork BasisNetwork::initialize(const NetworkConfig& config, int input_dim, std::uint64_t seed) {
  config.validate();
  if (input_dim < 1) throw std::invalid_argument("network input dimension must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  NetworkParams p;
  int fan_in = input_dim;
  for (int width : config.layer_widths) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(width, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * normal(rng);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(width));
    fan_in = width;
  }
  p.head_weights.resize(fan_in);
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < fan_in; ++i) p.head_weights[i] = scale * normal(rng);
  p.head_bias = 0.0;
  return BasisNetwork(config, input_dim, std::move(p));
}

Vector BasisNetwork::features(const Vector& x) const {
  if (x.size() != input_dim_) throw std::invalid_argument("feature input dimension mismatch");
  Matrix X = x.transpose();
  return features(X).row(0).transpose();
}

Matrix BasisNetwork::features(const Matrix& X) const {
  if (X.cols() != input_dim_) throw std::invalid_argument("feature input dimension mismatch");
  Matrix h = X;
  const std::size_t n_layers = params_.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix z = h * params_.weights[l].transpose();
    z.rowwise() += params_.biases[l].transpose();
    if (uses_tanh(config_.activation, l, n_layers)) {
      h = z.array().tanh().matrix();
    } else {
      h = z.cwiseMax(0.0);
    }
  }
  return h;
}

Vector BasisNetwork::head_output(const Matrix& X) const {
  Vector out = features(X) * params_.head_weights;
  out.array() += params_.head_bias;
  return out;
}

LossGradient loss_and_gradient(const BasisNetwork& net, const Matrix& X, const Vector& y, double l2, HeadLoss loss) {
  if (X.rows() == 0) throw std::invalid_argument("loss_and_gradient needs a nonempty batch");
  if (X.rows() != y.size()) throw std::invalid_argument("batch inputs and targets differ in length");
  if (X.cols() != net.input_dim()) throw std::invalid_argument("batch input dimension mismatch");
  check_finite(X, y);

  const auto& p = net.params();
  const auto acts = forward_all(net.config(), p, X);
  const Matrix& top = acts.back();
  Vector out = top * p.head_weights;
  out.array() += p.head_bias;

  const double inv_n = 1.0 / static_cast<double>(X.rows());
  LossGradient result;
  Vector d_out(out.size());
  double data_loss = 0.0;
  if (loss == HeadLoss::squared_error) {
    const Vector r = out - y;
    data_loss = r.squaredNorm() * inv_n;
    d_out = 2.0 * inv_n * r;
  } else {
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      data_loss += softplus(out[i]) - y[i] * out[i];
      d_out[i] = inv_n * (sigmoid(out[i]) - y[i]);
    }
    data_loss *= inv_n;
  }
  result.loss = data_loss + l2 * p.weight_sq_norm();

  NetworkParams& g = result.gradient;
  g.weights.resize(p.weights.size());
  g.biases.resize(p.biases.size());
  g.head_weights = top.transpose() * d_out + 2.0 * l2 * p.head_weights;
  g.head_bias = d_out.sum();

  Matrix d_h = d_out * p.head_weights.transpose();
  const std::size_t n_layers = p.weights.size();
  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& h = acts[l + 1];
    Matrix d_z;
    if (uses_tanh(net.config().activation, l, n_layers)) {
      d_z = d_h.array() * (1.0 - h.array().square());
    } else {
      d_z = d_h.array() * (h.array() > 0.0).cast<double>();
    }
    g.weights[l] = d_z.transpose() * acts[l] + 2.0 * l2 * p.weights[l];
    g.biases[l] = d_z.colwise().sum().transpose();
    if (l > 0) d_h = d_z * p.weights[l];
  }
  return result;
}

TrainingResult train_map(const NetworkConfig& config, const Matrix& X, const Vector& y, std::uint64_t seed,
                         HeadLoss loss) {
  config.validate();
  if (X.rows() == 0) throw std::invalid_argument("train_map needs at least one observation");
  if (X.rows() != y.size()) throw std::invalid_argument("inputs and targets differ in length");
  check_finite(X, y);

  BasisNetwork net = BasisNetwork::initialize(config, static_cast<int>(X.cols()), derive_seed(seed, 1));
  NetworkParams velocity = net.params().zeros_like();
  const Eigen::Index n = X.rows();

  if (n <= config.full_batch_limit) {
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const auto lg = loss_and_gradient(net, X, y, config.l2_penalty, loss);
      momentum_update(net.mutable_params(), velocity, lg.gradient, config.learning_rate, config.momentum);
    }
  } else {
    Rng rng(derive_seed(seed, 2));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::Index bs = config.batch_size;
    Matrix xb;
    Vector yb;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index start = 0; start < n; start += bs) {
        const Eigen::Index m = std::min(bs, n - start);
        xb.resize(m, X.cols());
        yb.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
          xb.row(i) = X.row(order[static_cast<std::size_t>(start + i)]);
          yb[i] = y[order[static_cast<std::size_t>(start + i)]];
        }
        const auto lg = loss_and_gradient(net, xb, yb, config.l2_penalty, loss);
        momentum_update(net.mutable_params(), velocity, lg.gradient, config.learning_rate, config.momentum);
      }
    }
  }

  const double final_loss = loss_and_gradient(net, X, y, 0.0, loss).loss;
  return TrainingResult{std::move(net), final_loss};
}

}  // namespace dngo
