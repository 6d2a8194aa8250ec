#include "dngo/bayes_linear.hpp"

#include "dngo/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dngo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::LLT<Matrix> factorize_spd(const Matrix& k, double& jitter_used) {
  Eigen::LLT<Matrix> llt(k);
  jitter_used = 0.0;
  if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) return llt;
  const double scale = std::max(k.diagonal().cwiseAbs().mean(), 1.0);
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
    Matrix kj = k;
    kj.diagonal().array() += jitter * scale;
    llt.compute(kj);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) {
      jitter_used = jitter * scale;
      return llt;
    }
  }
  throw NumericalError("posterior precision is not positive definite even with jitter 1e-6");
}

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double evidence(double alpha, double beta, Eigen::Index n, Eigen::Index d, double resid_sq, double m_sq,
                double log_det_k) {
  return 0.5 * static_cast<double>(d) * std::log(alpha) + 0.5 * static_cast<double>(n) * std::log(beta) -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * beta * resid_sq - 0.5 * alpha * m_sq -
         0.5 * log_det_k;
}

void check_theta_dims(const RegressionHyperparams& theta, Eigen::Index k) {
  if (theta.center.size() != k || theta.quad_scales.size() != k) {
    throw std::invalid_argument("hyperparameter dimension does not match input dimension");
  }
}

// exp(x) * E1(x) for x > 0.
double scaled_e1(double x) {
  if (x <= 1.0) {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 60; ++k) {
      term *= -x / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return std::exp(x) * (-std::numbers::egamma - std::log(x) - sum);
  }
  // Continued fraction (modified Lentz) for exp(x) E1(x).
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

RegressionHyperparams RegressionHyperparams::defaults(int input_dim) {
  RegressionHyperparams t;
  t.alpha = 1.0;
  t.beta = 100.0;
  t.lambda = 0.0;
  t.quad_scales = Vector::Constant(input_dim, 0.1);
  t.center = Vector::Constant(input_dim, kCenterPriorMean);
  return t;
}

void RegressionHyperparams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("alpha and beta must be positive");
  if (quad_scales.size() != center.size()) throw std::invalid_argument("quad_scales and center differ in size");
  if (!(quad_scales.array() > 0.0).all()) throw std::invalid_argument("quadratic scales must be positive");
  if (!std::isfinite(lambda) || !center.allFinite()) throw std::invalid_argument("lambda and center must be finite");
}

double prior_mean(const RegressionHyperparams& theta, const Vector& x) {
  check_theta_dims(theta, x.size());
  return theta.lambda + ((x - theta.center).array().square() * theta.quad_scales.array()).sum();
}

Vector prior_mean(const RegressionHyperparams& theta, const Matrix& X) {
  check_theta_dims(theta, X.cols());
  Vector eta(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    eta[i] = theta.lambda +
             ((X.row(i).transpose() - theta.center).array().square() * theta.quad_scales.array()).sum();
  }
  return eta;
}

PosteriorState::PosteriorState(Matrix phi, Vector y_hat, double alpha, double beta)
    : phi_(std::move(phi)), y_hat_(std::move(y_hat)), alpha_(alpha), beta_(beta) {
  if (!(alpha_ > 0.0) || !(beta_ > 0.0)) throw std::invalid_argument("alpha and beta must be positive");
  if (phi_.rows() != y_hat_.size()) throw std::invalid_argument("design rows and targets differ in length");
  if (phi_.cols() < 1) throw std::invalid_argument("feature dimension must be >= 1");
  if (!phi_.allFinite() || !y_hat_.allFinite()) throw std::invalid_argument("design and targets must be finite");
  const Eigen::Index d = phi_.cols();
  k_ = Matrix::Identity(d, d) * alpha_;
  if (phi_.rows() > 0) k_.selfadjointView<Eigen::Lower>().rankUpdate(phi_.transpose(), beta_);
  k_ = k_.selfadjointView<Eigen::Lower>();
  factor_ = factorize_spd(k_, jitter_);
  if (phi_.rows() > 0) {
    m_ = factor_.solve(beta_ * (phi_.transpose() * y_hat_));
  } else {
    m_ = Vector::Zero(d);
  }
}

Prediction PosteriorState::predict(const Vector& phi, double eta) const {
  if (phi.size() != feature_dim()) throw std::invalid_argument("feature vector dimension mismatch");
  const Vector v = factor_.matrixL().solve(phi);
  return Prediction{m_.dot(phi) + eta, v.squaredNorm() + 1.0 / beta_};
}

void PosteriorState::predict(const Matrix& phi_rows, const Vector& eta, Vector& mean, Vector& variance) const {
  if (phi_rows.cols() != feature_dim() || eta.size() != phi_rows.rows()) {
    throw std::invalid_argument("batch prediction dimension mismatch");
  }
  mean = phi_rows * m_ + eta;
  variance = weight_variance(phi_rows).array() + 1.0 / beta_;
}

Vector PosteriorState::weight_variance(const Matrix& phi_rows) const {
  const Matrix v = factor_.matrixL().solve(phi_rows.transpose());
  return v.colwise().squaredNorm().transpose();
}

Vector PosteriorState::solve(const Vector& rhs) const { return factor_.solve(rhs); }

Vector PosteriorState::sample_weights(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(feature_dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  // K = L L^T, so L^{-T} z ~ N(0, K^{-1}).
  return m_ + factor_.matrixU().solve(z);
}

PosteriorState PosteriorState::extended(const Matrix& extra_phi, const Vector& extra_y_hat) const {
  if (extra_phi.rows() == 0) return *this;
  Matrix phi(phi_.rows() + extra_phi.rows(), phi_.cols());
  phi << phi_, extra_phi;
  Vector y(y_hat_.size() + extra_y_hat.size());
  y << y_hat_, extra_y_hat;
  return PosteriorState(std::move(phi), std::move(y), alpha_, beta_);
}

double PosteriorState::log_marginal_likelihood() const {
  if (phi_.rows() == 0) return 0.0;
  const double resid_sq = (y_hat_ - phi_ * m_).squaredNorm();
  return evidence(alpha_, beta_, phi_.rows(), phi_.cols(), resid_sq, m_.squaredNorm(), log_det_from_llt(factor_));
}

PosteriorState fit_posterior(const Matrix& phi, const Vector& y, const RegressionHyperparams& theta, const Matrix& X) {
  theta.validate();
  if (X.rows() != y.size()) throw std::invalid_argument("inputs and targets differ in length");
  return PosteriorState(phi, y - prior_mean(theta, X), theta.alpha, theta.beta);
}

Prediction predict(const PosteriorState& state, const Vector& phi, double eta) { return state.predict(phi, eta); }

double log_marginal_likelihood(const Matrix& phi, const Vector& y, const RegressionHyperparams& theta,
                               const Matrix& X) {
  return EvidenceModel(phi, y, X).log_evidence(theta);
}

EvidenceModel::EvidenceModel(Matrix phi, Vector y, Matrix X) : phi_(std::move(phi)), y_(std::move(y)), x_(std::move(X)) {
  if (phi_.rows() != y_.size() || x_.rows() != y_.size()) {
    throw std::invalid_argument("design, targets and inputs differ in length");
  }
  if (!phi_.allFinite() || !y_.allFinite()) throw std::invalid_argument("design and targets must be finite");
  gram_ = Matrix::Zero(phi_.cols(), phi_.cols());
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(phi_.transpose());
  gram_ = gram_.selfadjointView<Eigen::Lower>();

  const Eigen::Index k = x_.cols();
  Matrix z(x_.rows(), 1 + 2 * k);
  z.col(0).setOnes();
  z.middleCols(1, k) = x_.array().square().matrix();
  z.rightCols(k) = x_;
  phi_z_ = phi_.transpose() * z;
  z_z_ = z.transpose() * z;
  phi_y_ = phi_.transpose() * y_;
  z_y_ = z.transpose() * y_;
  y_y_ = y_.squaredNorm();
}

double EvidenceModel::log_evidence(const RegressionHyperparams& theta) const {
  theta.validate();
  check_theta_dims(theta, x_.cols());
  if (y_.size() == 0) return 0.0;
  const Eigen::Index k = x_.cols();
  Vector coef(1 + 2 * k);
  coef[0] = theta.lambda + (theta.quad_scales.array() * theta.center.array().square()).sum();
  coef.segment(1, k) = theta.quad_scales;
  coef.tail(k) = -2.0 * theta.quad_scales.cwiseProduct(theta.center);

  const Vector b = phi_y_ - phi_z_ * coef;  // phi^T y_hat
  const double yhat_sq = std::max(y_y_ - 2.0 * coef.dot(z_y_) + coef.dot(z_z_ * coef), 0.0);
  Matrix kmat = theta.beta * gram_;
  kmat.diagonal().array() += theta.alpha;
  double jitter = 0.0;
  const auto llt = factorize_spd(kmat, jitter);
  const Vector m = llt.solve(theta.beta * b);
  // beta |y_hat - phi m|^2 + alpha |m|^2 at the posterior mean.
  const double fit = std::max(theta.beta * (yhat_sq - m.dot(b)), 0.0);
  const auto n = static_cast<double>(phi_.rows()), d = static_cast<double>(phi_.cols());
  return 0.5 * d * std::log(theta.alpha) + 0.5 * n * std::log(theta.beta) - 0.5 * n * std::log(2.0 * std::numbers::pi) -
         0.5 * fit - 0.5 * log_det_from_llt(llt);
}

double horseshoe_density(double t, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("horseshoe scale must be positive");
  const double s = t / tau;
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  const double x = 0.5 * s * s;
  return scaled_e1(x) / (tau * std::sqrt(2.0 * std::pow(std::numbers::pi, 3)));
}

double log_horseshoe_density(double t, double tau) { return std::log(horseshoe_density(t, tau)); }

double log_hyperprior(const RegressionHyperparams& theta) {
  if (!(theta.alpha >= kPrecisionMin && theta.alpha <= kPrecisionMax)) return kNegInf;
  if (!(theta.beta >= kPrecisionMin && theta.beta <= kPrecisionMax)) return kNegInf;
  if (!std::isfinite(theta.lambda)) return kNegInf;
  const double log_range = std::log(std::log(kPrecisionMax / kPrecisionMin));
  double lp = -std::log(theta.alpha) - log_range - std::log(theta.beta) - log_range;
  lp += log_normal_pdf(theta.lambda, 0.0, kLambdaPriorSd);
  for (Eigen::Index k = 0; k < theta.quad_scales.size(); ++k) {
    const double s = theta.quad_scales[k];
    if (!(s > 0.0) || !std::isfinite(s)) return kNegInf;
    // Half-horseshoe on the positive reals.
    lp += std::log(2.0) + log_horseshoe_density(s);
  }
  for (Eigen::Index k = 0; k < theta.center.size(); ++k) {
    if (!std::isfinite(theta.center[k])) return kNegInf;
    lp += log_normal_pdf(theta.center[k], kCenterPriorMean, kCenterPriorSd);
  }
  return lp;
}

double slice_sample_step(const LogDensity& log_density, double x0, double width, Rng& rng,
                         const SliceOptions& options) {
  if (!(width > 0.0)) throw std::invalid_argument("slice width must be positive");
  const double f0 = log_density(x0);
  if (!std::isfinite(f0)) throw std::invalid_argument("slice sampler started at a point with non-finite log density");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  const double log_y = f0 - expo(rng);

  double left = x0 - width * unif(rng);
  double right = left + width;
  int steps = 0;
  while (log_density(left) > log_y) {
    if (++steps > options.max_step_out) throw SamplerError("slice step-out exceeded limit on the left");
    left -= width;
  }
  steps = 0;
  while (log_density(right) > log_y) {
    if (++steps > options.max_step_out) throw SamplerError("slice step-out exceeded limit on the right");
    right += width;
  }

  for (int i = 0; i < options.max_shrink; ++i) {
    const double x1 = left + unif(rng) * (right - left);
    if (log_density(x1) >= log_y) return x1;
    if (x1 < x0) {
      left = x1;
    } else {
      right = x1;
    }
  }
  // The bracket has collapsed onto x0, which is always on the slice.
  return x0;
}

double slice_sample_step(const LogDensity& log_density, double x0, double width, std::uint64_t seed,
                         const SliceOptions& options) {
  Rng rng(seed);
  return slice_sample_step(log_density, x0, width, rng, options);
}

void SamplerConfig::validate() const {
  if (burn_in < 0 || n_samples < 0) throw std::invalid_argument("burn_in and n_samples must be >= 0");
  if (thinning < 1) throw std::invalid_argument("thinning must be >= 1");
  if (!(width > 0.0)) throw std::invalid_argument("slice width must be positive");
}

namespace {

// Sampled coordinates: [log alpha, log beta, lambda, log Lambda_1..K, c_1..K].
Vector pack(const RegressionHyperparams& t) {
  const Eigen::Index k = t.center.size();
  Vector u(3 + 2 * k);
  u[0] = std::log(t.alpha);
  u[1] = std::log(t.beta);
  u[2] = t.lambda;
  u.segment(3, k) = t.quad_scales.array().log();
  u.segment(3 + k, k) = t.center;
  return u;
}

RegressionHyperparams unpack(const Vector& u, Eigen::Index k) {
  RegressionHyperparams t;
  t.alpha = std::exp(u[0]);
  t.beta = std::exp(u[1]);
  t.lambda = u[2];
  t.quad_scales = u.segment(3, k).array().exp();
  t.center = u.segment(3 + k, k);
  return t;
}

}  // namespace

std::vector<RegressionHyperparams> slice_sample_hyperparams(const Matrix& phi, const Vector& y, const Matrix& X,
                                                            const RegressionHyperparams& theta0,
                                                            const SamplerConfig& config, std::uint64_t seed) {
  config.validate();
  theta0.validate();
  check_theta_dims(theta0, X.cols());
  std::vector<RegressionHyperparams> samples;
  if (config.n_samples == 0) return samples;

  const EvidenceModel model(phi, y, X);
  const Eigen::Index k = X.cols();
  const Eigen::Index n_coords = 3 + 2 * k;

  // Log posterior in the sampled coordinates, including the log-space Jacobians.
  auto log_post = [&](const Vector& u) {
    if (!u.allFinite()) return kNegInf;
    if (u[0] < std::log(kPrecisionMin) || u[0] > std::log(kPrecisionMax)) return kNegInf;
    if (u[1] < std::log(kPrecisionMin) || u[1] > std::log(kPrecisionMax)) return kNegInf;
    if ((u.segment(3, k).array() < -700.0).any() || (u.segment(3, k).array() > 700.0).any()) return kNegInf;
    const auto theta = unpack(u, k);
    const double prior = log_hyperprior(theta);
    if (!std::isfinite(prior)) return kNegInf;
    const double jacobian = u[0] + u[1] + u.segment(3, k).sum();
    const double lp = model.log_evidence(theta) + prior + jacobian;
    return std::isnan(lp) ? kNegInf : lp;
  };

  Vector u = pack(theta0);
  if (!std::isfinite(log_post(u))) throw std::invalid_argument("initial hyperparameters have zero posterior density");

  Rng rng(seed);
  const int total_sweeps = config.burn_in + config.n_samples * config.thinning;
  samples.reserve(static_cast<std::size_t>(config.n_samples));
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    for (Eigen::Index c = 0; c < n_coords; ++c) {
      auto conditional = [&](double v) {
        const double saved = u[c];
        u[c] = v;
        const double lp = log_post(u);
        u[c] = saved;
        return lp;
      };
      try {
        u[c] = slice_sample_step(conditional, u[c], config.width, rng);
      } catch (const Error& e) {
        std::ostringstream msg;
        msg << "hyperparameter chain aborted at sweep " << sweep << ", coordinate " << c << ": " << e.what();
        throw SamplerError(msg.str());
      }
    }
    if (sweep >= config.burn_in && (sweep - config.burn_in + 1) % config.thinning == 0) {
      samples.push_back(unpack(u, k));
    }
  }
  return samples;
}

}  // namespace dngo
