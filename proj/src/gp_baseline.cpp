#include "dngo/gp_baseline.hpp"

#include "dngo/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dngo {

void KernelParams::validate() const {
  if (lengthscales.size() < 1) throw std::invalid_argument("kernel needs at least one lengthscale");
  if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite()) {
    throw std::invalid_argument("kernel lengthscales must be positive and finite");
  }
  if (!(signal_variance > 0.0)) throw std::invalid_argument("signal variance must be positive");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
}

KernelParams KernelParams::median_heuristic(const Matrix& X, double signal_variance, double noise_variance) {
  KernelParams p;
  p.signal_variance = signal_variance;
  p.noise_variance = noise_variance;
  p.lengthscales.resize(X.cols());
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(X.rows() * std::max<Eigen::Index>(X.rows() - 1, 0) / 2));
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    dist.clear();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < X.rows(); ++j) dist.push_back(std::abs(X(i, k) - X(j, k)));
    }
    double med = 0.0;
    if (!dist.empty()) {
      auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
      std::nth_element(dist.begin(), mid, dist.end());
      med = *mid;
    }
    p.lengthscales[k] = std::max(med, 1e-3);
  }
  return p;
}

GPModel::GPModel(Matrix X, Vector y, KernelParams params) : x_(std::move(X)), y_(std::move(y)), params_(std::move(params)) {
  params_.validate();
  if (x_.rows() < 1) throw std::invalid_argument("GP needs at least one observation");
  if (x_.rows() != y_.size()) throw std::invalid_argument("GP inputs and targets differ in length");
  if (x_.cols() != params_.lengthscales.size()) throw std::invalid_argument("lengthscale count does not match inputs");

  Matrix k = cross_kernel(x_);
  k.diagonal().array() += params_.noise_variance;
  factor_.compute(k);
  if (factor_.info() != Eigen::Success) {
    bool ok = false;
    for (double j = 1e-10; j <= 1e-6 * 1.0001; j *= 10.0) {
      Matrix kj = k;
      kj.diagonal().array() += j * params_.signal_variance;
      factor_.compute(kj);
      if (factor_.info() == Eigen::Success) {
        jitter_ = j * params_.signal_variance;
        ok = true;
        break;
      }
    }
    if (!ok) throw NumericalError("GP covariance is not positive definite even with jitter 1e-6");
  }
  weights_ = factor_.solve(y_);
}

double GPModel::kernel(const Vector& a, const Vector& b) const {
  const double r2 = ((a - b).array() / params_.lengthscales.array()).square().sum();
  return params_.signal_variance * std::exp(-0.5 * r2);
}

Matrix GPModel::cross_kernel(const Matrix& X) const {
  const Vector inv_ls = params_.lengthscales.cwiseInverse();
  const Matrix a = X * inv_ls.asDiagonal();
  const Matrix b = x_ * inv_ls.asDiagonal();
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Matrix r2 = -2.0 * (a * b.transpose());
  r2.colwise() += an;
  r2.rowwise() += bn.transpose();
  return params_.signal_variance * (-0.5 * r2.cwiseMax(0.0)).array().exp().matrix();
}

Prediction GPModel::predict(const Vector& x) const {
  Vector mean, var;
  predict(Matrix(x.transpose()), mean, var);
  return {mean[0], var[0]};
}

void GPModel::predict(const Matrix& X, Vector& mean, Vector& variance) const {
  if (X.cols() != x_.cols()) throw std::invalid_argument("GP prediction dimension mismatch");
  const Matrix ks = cross_kernel(X);  // M x N
  mean = ks * weights_;
  const Matrix v = factor_.matrixL().solve(ks.transpose());
  variance = (params_.signal_variance + params_.noise_variance - v.colwise().squaredNorm().array()).cwiseMax(
      params_.noise_variance > 0.0 ? params_.noise_variance : 1e-12);
}

GPModel gp_fit(const Matrix& X, const Vector& y, const KernelParams& params) { return GPModel(X, y, params); }

Vector gp_suggest(const GPModel& model, double f_best, int dim, const InnerOptimizerConfig& config,
                  std::uint64_t seed, const Matrix& extra_candidates) {
  BatchObjective ei = [&](const Matrix& X) {
    Vector mean, var;
    model.predict(X, mean, var);
    Vector out(mean.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = expected_improvement(mean[i], std::sqrt(var[i]), f_best);
    return out;
  };
  BatchObjective sd = [&](const Matrix& X) {
    Vector mean, var;
    model.predict(X, mean, var);
    return Vector(var.cwiseSqrt());
  };
  return optimize_acquisition(ei, dim, config, seed, sd, extra_candidates);
}

}  // namespace dngo
