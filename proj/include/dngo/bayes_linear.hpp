#pragma once

#include "dngo/domain.hpp"
#include "dngo/random.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace dngo {

/// Theta: weight precision alpha, noise precision beta, and the quadratic prior
/// mean eta(x) = lambda + (x - c)^T diag(quad_scales) (x - c).
struct RegressionHyperparams {
  double alpha = 1.0;
  double beta = 100.0;
  double lambda = 0.0;
  Vector quad_scales;  // Lambda_kk
  Vector center;       // c

  static RegressionHyperparams defaults(int input_dim);
  int input_dim() const { return static_cast<int>(center.size()); }
  void validate() const;
};

/// eta(x) >= lambda for every x.
double prior_mean(const RegressionHyperparams& theta, const Vector& x);
/// eta evaluated on every row of X.
Vector prior_mean(const RegressionHyperparams& theta, const Matrix& X);

struct Prediction {
  double mean;
  double variance;
};

/// Posterior over the output weights given a design matrix and residual
/// targets y_hat = y - eta(x). Immutable once built.
class PosteriorState {
 public:
  /// Builds K = beta Phi^T Phi + alpha I and m = beta K^{-1} Phi^T y_hat.
  PosteriorState(Matrix phi, Vector y_hat, double alpha, double beta);

  const Matrix& design() const noexcept { return phi_; }
  const Vector& residual_targets() const noexcept { return y_hat_; }
  const Matrix& precision() const noexcept { return k_; }
  const Vector& mean_weights() const noexcept { return m_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  int feature_dim() const noexcept { return static_cast<int>(k_.rows()); }
  std::size_t n_obs() const noexcept { return static_cast<std::size_t>(phi_.rows()); }
  /// Jitter added to the diagonal of K before the factorization succeeded (usually 0).
  double jitter() const noexcept { return jitter_; }

  /// mu = m^T phi + eta, sigma^2 = phi^T K^{-1} phi + 1/beta.
  Prediction predict(const Vector& phi, double eta) const;
  /// Rows of `phi_rows` are feature vectors.
  void predict(const Matrix& phi_rows, const Vector& eta, Vector& mean, Vector& variance) const;

  /// phi^T K^{-1} phi for every row.
  Vector weight_variance(const Matrix& phi_rows) const;
  Vector solve(const Vector& rhs) const;
  /// Draw w ~ N(m, K^{-1}).
  Vector sample_weights(Rng& rng) const;

  /// Posterior after appending rows (extra_phi, extra_y_hat).
  PosteriorState extended(const Matrix& extra_phi, const Vector& extra_y_hat) const;

  /// Evidence log p(y_hat | alpha, beta) with the weights integrated out.
  double log_marginal_likelihood() const;

 private:
  Matrix phi_;
  Vector y_hat_;
  double alpha_;
  double beta_;
  Matrix k_;
  Eigen::LLT<Matrix> factor_;
  double jitter_ = 0.0;
  Vector m_;
};

/// Residual targets y - eta(X) for theta, then the posterior.
PosteriorState fit_posterior(const Matrix& phi, const Vector& y, const RegressionHyperparams& theta, const Matrix& X);

Prediction predict(const PosteriorState& state, const Vector& phi, double eta);

double log_marginal_likelihood(const Matrix& phi, const Vector& y, const RegressionHyperparams& theta,
                               const Matrix& X);

/// Evaluates the evidence for many theta against fixed (Phi, y, X), caching Phi^T Phi.
class EvidenceModel {
 public:
  EvidenceModel(Matrix phi, Vector y, Matrix X);

  double log_evidence(const RegressionHyperparams& theta) const;
  const Matrix& design() const noexcept { return phi_; }
  const Vector& targets() const noexcept { return y_; }
  const Matrix& inputs() const noexcept { return x_; }

 private:
  Matrix phi_;
  Vector y_;
  Matrix x_;
  // The prior mean is linear in the columns [1, x^2, x]; everything below is
  // a cross product with those columns, so an evaluation costs O(D^3 + K^2).
  Matrix gram_;        // phi^T phi
  Matrix phi_z_;       // phi^T z
  Matrix z_z_;         // z^T z
  Vector phi_y_;       // phi^T y
  Vector z_y_;         // z^T y
  double y_y_ = 0.0;
};

/// Bounds of the truncated log-uniform priors on alpha and beta.
inline constexpr double kPrecisionMin = 1e-4;
inline constexpr double kPrecisionMax = 1e4;
/// Prior standard deviations of lambda (mean 0) and each c_k (mean 0.5).
inline constexpr double kLambdaPriorSd = 1.0;
inline constexpr double kCenterPriorSd = 1.0;
inline constexpr double kCenterPriorMean = 0.5;

/// Horseshoe density (global scale `tau`) via the closed form
/// p(t) = (2 pi^3)^{-1/2} / tau * exp(t^2 / 2tau^2) E1(t^2 / 2tau^2).
double horseshoe_density(double t, double tau = 1.0);
double log_horseshoe_density(double t, double tau = 1.0);

/// Log hyperprior of theta in its natural parameterization; -inf outside the support.
double log_hyperprior(const RegressionHyperparams& theta);

using LogDensity = std::function<double(double)>;

struct SliceOptions {
  int max_step_out = 200;
  int max_shrink = 200;
};

/// One univariate slice-sampling update with stepping out and shrinkage.
/// Throws SamplerError when the slice cannot be bracketed.
double slice_sample_step(const LogDensity& log_density, double x0, double width, Rng& rng,
                         const SliceOptions& options = {});
double slice_sample_step(const LogDensity& log_density, double x0, double width, std::uint64_t seed,
                         const SliceOptions& options = {});

struct SamplerConfig {
  int burn_in = 50;
  int n_samples = 10;
  int thinning = 2;
  double width = 1.0;

  void validate() const;
};

/// Coordinate-wise slice sampling of theta under evidence + hyperprior.
/// alpha, beta and the quadratic scales are sampled in log space.
std::vector<RegressionHyperparams> slice_sample_hyperparams(const Matrix& phi, const Vector& y, const Matrix& X,
                                                            const RegressionHyperparams& theta0,
                                                            const SamplerConfig& config, std::uint64_t seed);

}  // namespace dngo
