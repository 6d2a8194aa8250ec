#pragma once

#include "dngo/bayes_linear.hpp"
#include "dngo/constraint_model.hpp"
#include "dngo/domain.hpp"
#include "dngo/neural_basis.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace dngo {

double normal_pdf(double z);
double normal_cdf(double z);

/// sigma * [gamma Phi(gamma) + N(gamma; 0, 1)] with gamma = (f_best - mu) / sigma.
/// sigma == 0 gives the limit max(f_best - mu, 0).
double expected_improvement(double mu, double sigma, double f_best);

/// One hyperparameter sample and its posterior over output weights.
struct SurrogateSample {
  RegressionHyperparams theta;
  PosteriorState state;
};

/// Everything a suggestion needs, all on the standardized target scale.
struct AcquisitionContext {
  std::shared_ptr<const BasisNetwork> basis;  ///< objective features; may be null when V is empty
  std::vector<SurrogateSample> samples;
  std::shared_ptr<const ConstraintPosterior> constraint;  ///< null means P[valid] == 1
  /// Lowest valid observed value; nullopt switches to pure feasibility search.
  std::optional<double> f_best;
  std::vector<Vector> pending;  ///< running experiments, unit coordinates
  int n_fantasies = 10;

  void validate() const;
};

/// EI(x; V, theta_s) * P[c = 1 | x] for one hyperparameter sample.
double constrained_ei(const Vector& x, const AcquisitionContext& ctx, std::size_t sample = 0);

/// Hypothetical outcomes of the pending experiments under one theta sample.
struct Fantasy {
  Vector y;                 ///< working-scale values, one per pending point
  std::vector<bool> valid;  ///< drawn from prob_valid when a constraint model exists
};

/// n_fantasies joint draws of the pending outcomes from the predictive distribution.
/// With no pending points every fantasy is empty.
std::vector<Fantasy> fantasy_augment(const AcquisitionContext& ctx, const SurrogateSample& sample,
                                     std::uint64_t seed);

/// Posterior and incumbent after adding the valid fantasy outcomes to V.
struct FantasyPosterior {
  PosteriorState state;
  double f_best;
};

FantasyPosterior condition_on_fantasy(const SurrogateSample& sample, const Matrix& pending_features,
                                      const Matrix& pending_inputs, const Fantasy& fantasy, double f_best);

/// Integrated acquisition: the average over theta samples of the fantasy-averaged
/// constrained EI. Fantasy posteriors are drawn once at construction, so the object
/// is a deterministic function of x.
class IntegratedAcquisition {
 public:
  IntegratedAcquisition(const AcquisitionContext& ctx, std::uint64_t seed);

  /// Rows of X are candidate points.
  Vector evaluate(const Matrix& X) const;
  double operator()(const Vector& x) const;
  /// Average predictive standard deviation over theta samples, the fallback target
  /// when the acquisition is zero everywhere.
  Vector predictive_sd(const Matrix& X) const;

 private:
  struct Branch {
    const SurrogateSample* sample;
    std::vector<FantasyPosterior> fantasies;  // empty when nothing is pending
  };

  const AcquisitionContext* ctx_;
  std::vector<Branch> branches_;
};

double integrated_acquisition(const Vector& x, const AcquisitionContext& ctx, std::uint64_t seed);

struct InnerOptimizerConfig {
  int n_candidates = 1000;
  int n_local = 10;
  int local_sweeps = 50;
  double initial_step = 0.05;
  double min_step = 1e-6;
  /// Gaussian perturbations of the best valid observations added to the candidate pool.
  int n_incumbent_candidates = 100;
  double incumbent_radius = 0.05;

  void validate() const;
};

/// Perturbations of the `n_best` lowest valid observations, with per-point scale
/// drawn from {radius/10, radius/3, radius}, clipped to the unit cube.
Matrix incumbent_candidates(const Dataset& data, int count, double radius, std::uint64_t seed, int n_best = 5);

/// Rows of the argument are points; returns one score per row.
using BatchObjective = std::function<Vector(const Matrix&)>;

/// Multistart maximization over [0,1]^dim: score quasi-random candidates (plus any
/// `extra_candidates` rows), refine the best `n_local` with a bounded coordinate
/// pattern search, return the best point. Ties go to the lowest candidate index.
/// If every candidate scores zero and `fallback` is set, the fallback objective
/// is maximized instead.
Vector optimize_acquisition(const BatchObjective& objective, int dim, const InnerOptimizerConfig& config,
                            std::uint64_t seed, const BatchObjective& fallback = {},
                            const Matrix& extra_candidates = Matrix());

/// Maximizes the integrated acquisition of `ctx`.
Vector optimize_acquisition(const AcquisitionContext& ctx, int dim, const InnerOptimizerConfig& config,
                            std::uint64_t seed, const Matrix& extra_candidates = Matrix());

}  // namespace dngo
