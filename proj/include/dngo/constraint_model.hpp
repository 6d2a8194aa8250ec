#pragma once

#include "dngo/domain.hpp"
#include "dngo/neural_basis.hpp"

#include <cstdint>
#include <vector>

namespace dngo {

enum class ConstraintLikelihood {
  logistic,     ///< noisy constraints
  step_approx,  ///< noiseless constraints: logistic with temperature `step_temperature`
};

/// Psi: prior precision of the output weights and the likelihood family.
struct ConstraintHyperparams {
  double weight_prior_precision = 1.0;
  ConstraintLikelihood likelihood = ConstraintLikelihood::logistic;
  double step_temperature = 1e-2;

  void validate() const;
  /// Multiplier applied to the linear activation before the logistic link.
  double activation_scale() const {
    return likelihood == ConstraintLikelihood::step_approx ? 1.0 / step_temperature : 1.0;
  }
};

/// Laplace approximation N(w_map, H^{-1}) of the logistic-regression posterior
/// over output weights. Features carry a trailing bias column.
struct LaplaceLogistic {
  Vector w_map;
  Matrix hessian;
  Eigen::LLT<Matrix> hessian_factor;
  double scale = 1.0;
  int iterations = 0;
  /// Negative log posterior after each Newton iteration, starting at w = 0.
  std::vector<double> objective_trace;

  /// Mean and variance of the scaled activation s * w^T phi under the Laplace posterior.
  void activation_moments(const Vector& features_with_bias, double& mean, double& variance) const;
};

struct IrlsOptions {
  int max_iterations = 100;
  double gradient_tol = 1e-8;
};

/// Newton/IRLS for the MAP weights under a zero-mean Gaussian prior, then the
/// Hessian at the MAP. Rows of `features` already include the bias column.
LaplaceLogistic fit_laplace_logistic(const Matrix& features, const Vector& labels, const ConstraintHyperparams& psi,
                                     const IrlsOptions& options = {});

/// E[logistic(a)] for a ~ N(mean, variance), by quadrature.
double logistic_gaussian_expectation(double mean, double variance);

class ConstraintPosterior {
 public:
  /// `feature_mean` and `feature_sd` standardize the network features before the
  /// logistic layer; empty vectors mean no scaling.
  ConstraintPosterior(BasisNetwork net, LaplaceLogistic layer, ConstraintHyperparams psi, Vector feature_mean = {},
                      Vector feature_sd = {});

  const BasisNetwork& basis_net() const noexcept { return net_; }
  const LaplaceLogistic& layer() const noexcept { return layer_; }
  const ConstraintHyperparams& hyperparams() const noexcept { return psi_; }
  const Vector& w_map() const noexcept { return layer_.w_map; }
  const Matrix& hessian() const noexcept { return layer_.hessian; }

  /// Standardized features of each row of X with the bias column appended.
  Matrix augmented_features(const Matrix& X) const;
  /// Marginal probability of validity for each row.
  Vector prob_valid(const Matrix& X) const;

 private:
  BasisNetwork net_;
  LaplaceLogistic layer_;
  ConstraintHyperparams psi_;
  Vector feature_mean_;
  Vector feature_sd_;
};

/// Trains a separate basis network with a cross-entropy head on the validity
/// labels of the whole dataset, then fits the Laplace logistic layer on its features.
ConstraintPosterior fit_constraint(const Dataset& data, const ConstraintHyperparams& psi,
                                   const NetworkConfig& net_config, std::uint64_t seed);

double prob_valid(const ConstraintPosterior& post, const Vector& x);
/// Probability under the steep-logistic (step) likelihood. The posterior must
/// have been fitted with ConstraintLikelihood::step_approx.
double prob_valid_noiseless(const ConstraintPosterior& post, const Vector& x);

}  // namespace dngo
