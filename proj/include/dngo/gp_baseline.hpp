#pragma once

#include "dngo/acquisition.hpp"
#include "dngo/bayes_linear.hpp"
#include "dngo/domain.hpp"

#include <cstdint>

namespace dngo {

/// Squared-exponential kernel with per-dimension lengthscales. Fixed, not learned:
/// the GP only serves as the cubic-cost reference point.
struct KernelParams {
  Vector lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-4;

  void validate() const;
  /// Lengthscale of each dimension = median pairwise distance along it.
  static KernelParams median_heuristic(const Matrix& X, double signal_variance = 1.0, double noise_variance = 1e-4);
};

class GPModel {
 public:
  GPModel(Matrix X, Vector y, KernelParams params);

  const Matrix& inputs() const noexcept { return x_; }
  const Vector& targets() const noexcept { return y_; }
  const KernelParams& params() const noexcept { return params_; }
  double jitter() const noexcept { return jitter_; }

  double kernel(const Vector& a, const Vector& b) const;
  /// Predictive mean and variance of a new observation (noise included).
  Prediction predict(const Vector& x) const;
  void predict(const Matrix& X, Vector& mean, Vector& variance) const;

 private:
  Matrix cross_kernel(const Matrix& X) const;

  Matrix x_;
  Vector y_;
  KernelParams params_;
  Eigen::LLT<Matrix> factor_;
  Vector weights_;
  double jitter_ = 0.0;
};

GPModel gp_fit(const Matrix& X, const Vector& y, const KernelParams& params);

/// EI on the GP predictive, maximized by the shared inner optimizer.
Vector gp_suggest(const GPModel& model, double f_best, int dim, const InnerOptimizerConfig& config,
                  std::uint64_t seed, const Matrix& extra_candidates = Matrix());

}  // namespace dngo
