#include "dngo/acquisition.hpp"

#include "dngo/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dngo {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mu, double sigma, double f_best) {
  if (!(sigma > 0.0)) return std::max(f_best - mu, 0.0);
  const double gamma = (f_best - mu) / sigma;
  return std::max(sigma * (gamma * normal_cdf(gamma) + normal_pdf(gamma)), 0.0);
}

void AcquisitionContext::validate() const {
  if (n_fantasies < 1) throw std::invalid_argument("n_fantasies must be >= 1");
  if (f_best) {
    if (!basis) throw std::invalid_argument("acquisition context with an incumbent needs a basis network");
    if (samples.empty()) throw std::invalid_argument("acquisition context needs at least one theta sample");
  }
  for (const auto& p : pending) {
    if ((p.array() < 0.0).any() || (p.array() > 1.0).any()) {
      throw std::out_of_range("pending point outside the unit cube");
    }
  }
}

namespace {

Vector ei_batch(const PosteriorState& state, const Matrix& phi, const Vector& eta, double f_best) {
  Vector mean, var;
  state.predict(phi, eta, mean, var);
  Vector ei(mean.size());
  for (Eigen::Index i = 0; i < ei.size(); ++i) ei[i] = expected_improvement(mean[i], std::sqrt(var[i]), f_best);
  return ei;
}

Matrix rows_of(const std::vector<Vector>& points, Eigen::Index dim) {
  Matrix X(static_cast<Eigen::Index>(points.size()), dim);
  for (std::size_t i = 0; i < points.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return X;
}

Vector feasibility(const AcquisitionContext& ctx, const Matrix& X) {
  return ctx.constraint ? ctx.constraint->prob_valid(X) : Vector::Ones(X.rows());
}

}  // namespace

double constrained_ei(const Vector& x, const AcquisitionContext& ctx, std::size_t sample) {
  const Matrix X = x.transpose();
  const Vector p = feasibility(ctx, X);
  if (!ctx.f_best) return p[0];
  if (sample >= ctx.samples.size()) throw std::out_of_range("theta sample index out of range");
  const auto& s = ctx.samples[sample];
  const Matrix phi = ctx.basis->features(X);
  return ei_batch(s.state, phi, prior_mean(s.theta, X), *ctx.f_best)[0] * p[0];
}

std::vector<Fantasy> fantasy_augment(const AcquisitionContext& ctx, const SurrogateSample& sample,
                                     std::uint64_t seed) {
  std::vector<Fantasy> out(static_cast<std::size_t>(ctx.n_fantasies));
  if (ctx.pending.empty()) return out;
  if (!ctx.basis) throw std::invalid_argument("fantasies need a basis network");
  const Matrix P = rows_of(ctx.pending, ctx.pending.front().size());
  const Matrix phi = ctx.basis->features(P);
  const Vector eta = prior_mean(sample.theta, P);
  const Vector p_valid = feasibility(ctx, P);
  const double noise_sd = 1.0 / std::sqrt(sample.state.beta());

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& f : out) {
    // Joint draw through the weights: marginals are the predictive mean/variance.
    const Vector w = sample.state.sample_weights(rng);
    f.y = phi * w + eta;
    f.valid.resize(ctx.pending.size());
    for (Eigen::Index j = 0; j < f.y.size(); ++j) {
      f.y[j] += noise_sd * normal(rng);
      f.valid[static_cast<std::size_t>(j)] = ctx.constraint ? unif(rng) < p_valid[j] : true;
    }
  }
  return out;
}

FantasyPosterior condition_on_fantasy(const SurrogateSample& sample, const Matrix& pending_features,
                                      const Matrix& pending_inputs, const Fantasy& fantasy, double f_best) {
  const Vector eta = prior_mean(sample.theta, pending_inputs);
  std::vector<Eigen::Index> rows;
  double best = f_best;
  for (std::size_t j = 0; j < fantasy.valid.size(); ++j) {
    if (!fantasy.valid[j]) continue;
    rows.push_back(static_cast<Eigen::Index>(j));
    best = std::min(best, fantasy.y[static_cast<Eigen::Index>(j)]);
  }
  Matrix extra_phi(static_cast<Eigen::Index>(rows.size()), pending_features.cols());
  Vector extra_y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    extra_phi.row(static_cast<Eigen::Index>(r)) = pending_features.row(rows[r]);
    extra_y[static_cast<Eigen::Index>(r)] = fantasy.y[rows[r]] - eta[rows[r]];
  }
  return FantasyPosterior{sample.state.extended(extra_phi, extra_y), best};
}

IntegratedAcquisition::IntegratedAcquisition(const AcquisitionContext& ctx, std::uint64_t seed) : ctx_(&ctx) {
  ctx.validate();
  if (!ctx.f_best) return;
  Matrix P, phi;
  if (!ctx.pending.empty()) {
    P = rows_of(ctx.pending, ctx.pending.front().size());
    phi = ctx.basis->features(P);
  }
  branches_.reserve(ctx.samples.size());
  for (std::size_t s = 0; s < ctx.samples.size(); ++s) {
    Branch b{&ctx.samples[s], {}};
    if (!ctx.pending.empty()) {
      // Fantasies are redrawn for every theta sample.
      for (const auto& f : fantasy_augment(ctx, ctx.samples[s], derive_seed(seed, s))) {
        b.fantasies.push_back(condition_on_fantasy(ctx.samples[s], phi, P, f, *ctx.f_best));
      }
    }
    branches_.push_back(std::move(b));
  }
}

Vector IntegratedAcquisition::evaluate(const Matrix& X) const {
  const Vector p = feasibility(*ctx_, X);
  if (!ctx_->f_best) return p;
  const Matrix phi = ctx_->basis->features(X);
  Vector acc = Vector::Zero(X.rows());
  for (const auto& b : branches_) {
    const Vector eta = prior_mean(b.sample->theta, X);
    if (b.fantasies.empty()) {
      acc += ei_batch(b.sample->state, phi, eta, *ctx_->f_best);
    } else {
      Vector inner = Vector::Zero(X.rows());
      for (const auto& f : b.fantasies) inner += ei_batch(f.state, phi, eta, f.f_best);
      acc += inner / static_cast<double>(b.fantasies.size());
    }
  }
  acc /= static_cast<double>(branches_.size());
  return acc.cwiseProduct(p);
}

double IntegratedAcquisition::operator()(const Vector& x) const { return evaluate(Matrix(x.transpose()))[0]; }

Vector IntegratedAcquisition::predictive_sd(const Matrix& X) const {
  if (!ctx_->f_best) return Vector::Zero(X.rows());
  const Matrix phi = ctx_->basis->features(X);
  Vector acc = Vector::Zero(X.rows());
  for (const auto& b : branches_) {
    Vector mean, var;
    b.sample->state.predict(phi, prior_mean(b.sample->theta, X), mean, var);
    acc += var.cwiseSqrt();
  }
  return acc / static_cast<double>(branches_.size());
}

double integrated_acquisition(const Vector& x, const AcquisitionContext& ctx, std::uint64_t seed) {
  return IntegratedAcquisition(ctx, seed)(x);
}

void InnerOptimizerConfig::validate() const {
  if (n_candidates < 1) throw std::invalid_argument("n_candidates must be >= 1");
  if (n_local < 0) throw std::invalid_argument("n_local must be >= 0");
  if (local_sweeps < 0) throw std::invalid_argument("local_sweeps must be >= 0");
  if (!(initial_step > 0.0) || !(min_step > 0.0)) throw std::invalid_argument("search steps must be positive");
  if (n_incumbent_candidates < 0) throw std::invalid_argument("n_incumbent_candidates must be >= 0");
  if (!(incumbent_radius > 0.0)) throw std::invalid_argument("incumbent_radius must be positive");
}

Matrix incumbent_candidates(const Dataset& data, int count, double radius, std::uint64_t seed, int n_best) {
  std::vector<std::size_t> valid = data.valid_indices();
  if (count <= 0 || valid.empty()) return Matrix(0, data.input_dim());
  const auto& obs = data.observations();
  std::stable_sort(valid.begin(), valid.end(),
                   [&](std::size_t a, std::size_t b) { return *obs[a].y() < *obs[b].y(); });
  valid.resize(std::min<std::size_t>(valid.size(), static_cast<std::size_t>(std::max(n_best, 1))));

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scales[3] = {radius / 10.0, radius / 3.0, radius};
  Matrix out(count, data.input_dim());
  for (int i = 0; i < count; ++i) {
    const Vector& center = obs[valid[static_cast<std::size_t>(i) % valid.size()]].x_unit();
    const double scale = scales[i % 3];
    for (Eigen::Index k = 0; k < out.cols(); ++k) out(i, k) = std::clamp(center[k] + scale * normal(rng), 0.0, 1.0);
  }
  return out;
}

namespace {

struct LocalResult {
  Vector x;
  double value;
};

LocalResult pattern_search(const BatchObjective& objective, Vector x, double fx, const InnerOptimizerConfig& cfg) {
  const Eigen::Index dim = x.size();
  Vector step = Vector::Constant(dim, cfg.initial_step);
  Matrix trial(2, dim);
  for (int sweep = 0; sweep < cfg.local_sweeps; ++sweep) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (step[k] < cfg.min_step) continue;
      trial.row(0) = x.transpose();
      trial.row(1) = x.transpose();
      trial(0, k) = std::min(x[k] + step[k], 1.0);
      trial(1, k) = std::max(x[k] - step[k], 0.0);
      const Vector v = objective(trial);
      const int pick = v[1] > v[0] ? 1 : 0;
      if (v[pick] > fx) {
        x = trial.row(pick).transpose();
        fx = v[pick];
        step[k] = std::min(2.0 * step[k], 0.5);
      } else {
        step[k] *= 0.5;
      }
    }
    if ((step.array() < cfg.min_step).all()) break;
  }
  return {std::move(x), fx};
}

}  // namespace

Vector optimize_acquisition(const BatchObjective& objective, int dim, const InnerOptimizerConfig& config,
                            std::uint64_t seed, const BatchObjective& fallback, const Matrix& extra_candidates) {
  config.validate();
  if (dim < 1) throw std::invalid_argument("acquisition dimension must be >= 1");
  if (extra_candidates.size() > 0 && extra_candidates.cols() != dim) {
    throw std::invalid_argument("extra candidates have the wrong dimension");
  }
  const ScrambledHalton halton(dim, seed);
  Matrix cand(config.n_candidates + extra_candidates.rows(), dim);
  cand.topRows(config.n_candidates) = halton.points(0, config.n_candidates);
  if (extra_candidates.rows() > 0) cand.bottomRows(extra_candidates.rows()) = extra_candidates.cwiseMax(0.0).cwiseMin(1.0);

  const BatchObjective* active = &objective;
  Vector scores = objective(cand);
  if (fallback && !(scores.array() > 0.0).any()) {
    active = &fallback;
    scores = fallback(cand);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(cand.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });

  Vector best_x = cand.row(order.front()).transpose();
  double best_v = scores[order.front()];
  const auto n_local = std::min<std::size_t>(static_cast<std::size_t>(config.n_local), order.size());
  for (std::size_t r = 0; r < n_local; ++r) {
    const Eigen::Index i = order[r];
    auto res = pattern_search(*active, cand.row(i).transpose(), scores[i], config);
    if (res.value > best_v) {
      best_v = res.value;
      best_x = std::move(res.x);
    }
  }
  return best_x.cwiseMax(0.0).cwiseMin(1.0);
}

Vector optimize_acquisition(const AcquisitionContext& ctx, int dim, const InnerOptimizerConfig& config,
                            std::uint64_t seed, const Matrix& extra_candidates) {
  const IntegratedAcquisition acq(ctx, derive_seed(seed, 0xfa47));
  BatchObjective objective = [&acq](const Matrix& X) { return acq.evaluate(X); };
  BatchObjective fallback;
  if (ctx.f_best) fallback = [&acq](const Matrix& X) { return acq.predictive_sd(X); };
  return optimize_acquisition(objective, dim, config, derive_seed(seed, 0xc0de), fallback, extra_candidates);
}

}  // namespace dngo
