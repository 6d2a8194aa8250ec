#include "dngo/constraint_model.hpp"

#include "dngo/error.hpp"
#include "dngo/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dngo {

namespace {

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct QuadratureRule {
  Vector nodes;
  Vector weights;  // normalized to sum to 1
};

// Golub-Welsch for a symmetric tridiagonal Jacobi matrix with zero diagonal.
QuadratureRule golub_welsch(const Vector& off_diagonal) {
  const Eigen::Index n = off_diagonal.size() + 1;
  Matrix j = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    j(k, k + 1) = off_diagonal[k];
    j(k + 1, k) = off_diagonal[k];
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(j);
  QuadratureRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().array().square();
  rule.weights /= rule.weights.sum();
  return rule;
}

// Nodes for E[f(Z)], Z ~ N(0, 1).
const QuadratureRule& hermite_rule() {
  static const QuadratureRule rule = [] {
    Vector off(47);
    for (Eigen::Index k = 0; k < off.size(); ++k) off[k] = std::sqrt(static_cast<double>(k + 1));
    return golub_welsch(off);
  }();
  return rule;
}

// Nodes for the integral of f(u) over u in (0, 1).
const QuadratureRule& legendre_unit_rule() {
  static const QuadratureRule rule = [] {
    Vector off(63);
    for (Eigen::Index k = 0; k < off.size(); ++k) {
      const double m = static_cast<double>(k + 1);
      off[k] = m / std::sqrt(4.0 * m * m - 1.0);
    }
    QuadratureRule r = golub_welsch(off);
    r.nodes = (r.nodes.array() + 1.0) * 0.5;
    return r;
  }();
  return rule;
}

double neg_log_posterior(const Matrix& f, const Vector& c, const Vector& w, double s, double precision) {
  const Vector a = s * (f * w);
  double v = 0.5 * precision * w.squaredNorm();
  for (Eigen::Index i = 0; i < a.size(); ++i) v += softplus(a[i]) - c[i] * a[i];
  return v;
}

Matrix with_bias(const Matrix& feats) {
  Matrix out(feats.rows(), feats.cols() + 1);
  out.leftCols(feats.cols()) = feats;
  out.col(feats.cols()).setOnes();
  return out;
}

}  // namespace

void ConstraintHyperparams::validate() const {
  if (!(weight_prior_precision > 0.0)) throw std::invalid_argument("constraint weight prior precision must be > 0");
  if (!(step_temperature > 0.0)) throw std::invalid_argument("step temperature must be > 0");
}

double logistic_gaussian_expectation(double mean, double variance) {
  const double sd = std::sqrt(std::max(variance, 0.0));
  if (sd == 0.0) return sigmoid(mean);
  double p = 0.0;
  if (sd <= 2.0) {
    const auto& rule = hermite_rule();
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) p += rule.weights[i] * sigmoid(mean + sd * rule.nodes[i]);
  } else {
    // E[sigma(A)] = integral of sigma'(a) Phi((mean - a)/sd) da, with u = sigma(a).
    const auto& rule = legendre_unit_rule();
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
      const double u = rule.nodes[i];
      const double a = std::log(u) - std::log1p(-u);
      p += rule.weights[i] * normal_cdf((mean - a) / sd);
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

void LaplaceLogistic::activation_moments(const Vector& features_with_bias, double& mean, double& variance) const {
  mean = scale * w_map.dot(features_with_bias);
  const Vector v = hessian_factor.matrixL().solve(features_with_bias);
  variance = scale * scale * v.squaredNorm();
}

LaplaceLogistic fit_laplace_logistic(const Matrix& features, const Vector& labels, const ConstraintHyperparams& psi,
                                     const IrlsOptions& options) {
  psi.validate();
  if (features.rows() != labels.size()) throw std::invalid_argument("features and labels differ in length");
  const Eigen::Index d = features.cols();
  const double s = psi.activation_scale();
  const double prec = psi.weight_prior_precision;

  LaplaceLogistic out;
  out.scale = s;
  out.w_map = Vector::Zero(d);
  Vector w = out.w_map;
  double f_cur = neg_log_posterior(features, labels, w, s, prec);
  out.objective_trace.push_back(f_cur);

  auto hessian_at = [&](const Vector& wv) {
    Matrix h = Matrix::Identity(d, d) * prec;
    if (features.rows() > 0) {
      const Vector a = s * (features * wv);
      Vector r(a.size());
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double p = sigmoid(a[i]);
        r[i] = s * s * p * (1.0 - p);
      }
      h.noalias() += features.transpose() * r.asDiagonal() * features;
    }
    return h;
  };
  auto gradient_at = [&](const Vector& wv) {
    Vector g = prec * wv;
    if (features.rows() > 0) {
      const Vector a = s * (features * wv);
      Vector r(a.size());
      for (Eigen::Index i = 0; i < a.size(); ++i) r[i] = sigmoid(a[i]) - labels[i];
      g.noalias() += s * (features.transpose() * r);
    }
    return g;
  };

  Vector g = gradient_at(w);
  int it = 0;
  while (g.norm() >= options.gradient_tol) {
    if (it >= options.max_iterations) {
      throw NumericalError("IRLS did not converge: gradient norm " + std::to_string(g.norm()) + " after " +
                           std::to_string(it) + " iterations");
    }
    const Matrix h = hessian_at(w);
    const Vector step = -h.llt().solve(g);
    const double slope = g.dot(step);
    double t = 1.0;
    Vector w_new = w + step;
    double f_new = neg_log_posterior(features, labels, w_new, s, prec);
    while (f_new > f_cur + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      w_new = w + t * step;
      f_new = neg_log_posterior(features, labels, w_new, s, prec);
    }
    ++it;
    // No representable decrease left; w is the optimum to working precision.
    if (!(f_new < f_cur)) break;
    const bool stalled = f_cur - f_new <= 1e-15 * std::max(1.0, std::abs(f_cur));
    w = w_new;
    f_cur = f_new;
    out.objective_trace.push_back(f_cur);
    g = gradient_at(w);
    if (stalled) break;
  }
  out.iterations = it;
  out.w_map = w;
  out.hessian = hessian_at(w);
  out.hessian_factor.compute(out.hessian);
  if (out.hessian_factor.info() != Eigen::Success) throw NumericalError("Laplace Hessian is not positive definite");
  return out;
}

ConstraintPosterior::ConstraintPosterior(BasisNetwork net, LaplaceLogistic layer, ConstraintHyperparams psi,
                                         Vector feature_mean, Vector feature_sd)
    : net_(std::move(net)),
      layer_(std::move(layer)),
      psi_(psi),
      feature_mean_(std::move(feature_mean)),
      feature_sd_(std::move(feature_sd)) {
  psi_.validate();
  const Eigen::Index d = net_.feature_dim();
  if (layer_.w_map.size() != d + 1) {
    throw std::invalid_argument("constraint weights must match feature dimension plus bias");
  }
  if (feature_mean_.size() == 0 && feature_sd_.size() == 0) {
    feature_mean_ = Vector::Zero(d);
    feature_sd_ = Vector::Ones(d);
  }
  if (feature_mean_.size() != d || feature_sd_.size() != d || !(feature_sd_.array() > 0.0).all()) {
    throw std::invalid_argument("feature scaling must have one positive sd per feature");
  }
  if (layer_.hessian_factor.rows() != layer_.hessian.rows()) layer_.hessian_factor.compute(layer_.hessian);
}

Matrix ConstraintPosterior::augmented_features(const Matrix& X) const {
  Matrix f = net_.features(X);
  f = (f.rowwise() - feature_mean_.transpose()).array().rowwise() / feature_sd_.transpose().array();
  return with_bias(f);
}

Vector ConstraintPosterior::prob_valid(const Matrix& X) const {
  const Matrix f = augmented_features(X);
  const Vector mean = layer_.scale * (f * layer_.w_map);
  const Matrix v = layer_.hessian_factor.matrixL().solve(f.transpose());
  const Vector var = layer_.scale * layer_.scale * v.colwise().squaredNorm().transpose();
  Vector p(X.rows());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = logistic_gaussian_expectation(mean[i], var[i]);
  return p;
}

ConstraintPosterior fit_constraint(const Dataset& data, const ConstraintHyperparams& psi,
                                   const NetworkConfig& net_config, std::uint64_t seed) {
  psi.validate();
  const int k = data.input_dim();
  if (k < 1) throw std::invalid_argument("fit_constraint needs a dataset with a known input dimension");
  if (data.empty()) {
    auto net = BasisNetwork::initialize(net_config, k, derive_seed(seed, 1));
    const Eigen::Index d = net.feature_dim() + 1;
    LaplaceLogistic layer;
    layer.scale = psi.activation_scale();
    layer.w_map = Vector::Zero(d);
    layer.hessian = Matrix::Identity(d, d) * psi.weight_prior_precision;
    layer.hessian_factor.compute(layer.hessian);
    return ConstraintPosterior(std::move(net), std::move(layer), psi);
  }
  const Matrix X = data.all_inputs();
  const Vector c = data.labels();
  auto trained = train_map(net_config, X, c, seed, HeadLoss::logistic);
  const Matrix raw = trained.network.features(X);
  const Vector mean = raw.colwise().mean().transpose();
  Vector sd = (raw.rowwise() - mean.transpose()).array().square().colwise().mean().sqrt().transpose();
  // Features constant over the data carry no label information; leave them unscaled.
  sd = (sd.array() > 1e-8).select(sd, 1.0);
  const Matrix feats = with_bias((raw.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array());
  auto layer = fit_laplace_logistic(feats, c, psi);
  return ConstraintPosterior(std::move(trained.network), std::move(layer), psi, mean, sd);
}

double prob_valid(const ConstraintPosterior& post, const Vector& x) {
  return post.prob_valid(Matrix(x.transpose()))[0];
}

double prob_valid_noiseless(const ConstraintPosterior& post, const Vector& x) {
  if (post.hyperparams().likelihood != ConstraintLikelihood::step_approx) {
    throw std::logic_error("prob_valid_noiseless needs a posterior fitted with the step likelihood");
  }
  return prob_valid(post, x);
}

}  // namespace dngo
