#include "dngo/optimizer.hpp"

#include "dngo/gp_baseline.hpp"
#include "dngo/random.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <memory>
#include <queue>
#include <stdexcept>

namespace dngo {

void EngineConfig::validate() const {
  if (initial_design < 0) throw std::invalid_argument("initial_design must be >= 0");
  if (n_fantasies < 1) throw std::invalid_argument("n_fantasies must be >= 1");
  if (constraint_epochs < 1) throw std::invalid_argument("constraint epochs must be >= 1");
  network.validate();
  sampler.validate();
  if (sampler.n_samples < 1) throw std::invalid_argument("the engine needs at least one theta sample");
  inner.validate();
  constraint.validate();
}

Optimizer::Optimizer(ParameterSpace space, EngineConfig config, std::uint64_t seed)
    : space_(std::move(space)), config_(std::move(config)), seed_(seed), dataset_(space_.size()) {
  config_.validate();
  logger_ = [](const std::string& msg) { std::cerr << "[dngo] " << msg << '\n'; };
}

namespace {

struct Standardizer {
  double mean = 0.0;
  double sd = 1.0;

  explicit Standardizer(const Vector& y) {
    if (y.size() == 0) return;
    mean = y.mean();
    const double var = (y.array() - mean).square().mean();
    sd = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  Vector apply(const Vector& y) const { return (y.array() - mean) / sd; }
  double apply(double y) const { return (y - mean) / sd; }
};

Matrix pending_rows(const std::vector<PendingPoint>& pending, int dim) {
  Matrix P(static_cast<Eigen::Index>(pending.size()), dim);
  for (std::size_t i = 0; i < pending.size(); ++i) P.row(static_cast<Eigen::Index>(i)) = pending[i].x_unit.transpose();
  return P;
}

}  // namespace

Suggestion Optimizer::suggest() {
  const auto start = std::chrono::steady_clock::now();
  Suggestion s;
  s.index = issued_;
  s.pending_before = pending_.size();
  const std::uint64_t seed = derive_seed(seed_, issued_);
  const int dim = space_.size();

  const auto n_init = static_cast<std::size_t>(config_.design_size(dim));
  const bool cold = (design_issued_ < n_init && dataset_.size() < n_init) || dataset_.empty();
  if (cold) {
    const ScrambledHalton design(dim, derive_seed(seed_, 0xd35167));
    s.x_unit = design.point(design_issued_++);
    s.from_design = true;
  } else if (config_.surrogate == SurrogateKind::gp) {
    s.x_unit = gp_suggestion(seed);
  } else {
    s.x_unit = dngo_suggestion(seed);
  }
  s.x_native = space_.from_unit(s.x_unit);
  pending_.push_back(PendingPoint{s.index, s.x_unit, s.x_native});
  ++issued_;
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

Vector Optimizer::dngo_suggestion(std::uint64_t seed) {
  const int dim = space_.size();
  AcquisitionContext ctx;
  ctx.n_fantasies = config_.n_fantasies;
  for (const auto& p : pending_) ctx.pending.push_back(p.x_unit);

  if (dataset_.n_invalid() > 0) {
    NetworkConfig net = config_.network;
    net.epochs = config_.constraint_epochs;
    ctx.constraint = std::make_shared<const ConstraintPosterior>(
        fit_constraint(dataset_, config_.constraint, net, derive_seed(seed, 3)));
  }

  if (dataset_.n_valid() > 0) {
    const Matrix X = dataset_.valid_inputs();
    const Standardizer stdz(dataset_.valid_targets());
    const Vector y = stdz.apply(dataset_.valid_targets());

    auto trained = train_map(config_.network, X, y, derive_seed(seed, 1));
    last_training_loss_ = trained.final_loss;
    auto basis = std::make_shared<const BasisNetwork>(std::move(trained.network));
    const Matrix phi = basis->features(X);

    RegressionHyperparams theta0 = RegressionHyperparams::defaults(dim);
    if (warm_theta_ && warm_theta_->input_dim() == dim) theta0 = *warm_theta_;
    last_thetas_ = slice_sample_hyperparams(phi, y, X, theta0, config_.sampler, derive_seed(seed, 2));
    warm_theta_ = last_thetas_.back();

    ctx.basis = basis;
    for (const auto& theta : last_thetas_) ctx.samples.push_back({theta, fit_posterior(phi, y, theta, X)});
    ctx.f_best = y.minCoeff();
  }

  const Matrix extra = incumbent_candidates(dataset_, config_.inner.n_incumbent_candidates,
                                            config_.inner.incumbent_radius, derive_seed(seed, 5));
  return optimize_acquisition(ctx, dim, config_.inner, derive_seed(seed, 4), extra);
}

Vector Optimizer::gp_suggestion(std::uint64_t seed) {
  const int dim = space_.size();
  if (dataset_.n_valid() == 0) {
    const ScrambledHalton design(dim, derive_seed(seed_, 0xd35167));
    return design.point(design_issued_++);
  }
  const Matrix X = dataset_.valid_inputs();
  const Standardizer stdz(dataset_.valid_targets());
  const Vector y = stdz.apply(dataset_.valid_targets());
  const KernelParams params = KernelParams::median_heuristic(X);
  GPModel model = gp_fit(X, y, params);
  if (!pending_.empty()) {
    // Pending points enter at their predicted mean.
    const Matrix P = pending_rows(pending_, dim);
    Vector mean, var;
    model.predict(P, mean, var);
    Matrix xa(X.rows() + P.rows(), dim);
    xa << X, P;
    Vector ya(y.size() + mean.size());
    ya << y, mean;
    model = gp_fit(xa, ya, params);
  }
  const Matrix extra = incumbent_candidates(dataset_, config_.inner.n_incumbent_candidates,
                                            config_.inner.incumbent_radius, derive_seed(seed, 5));
  return gp_suggest(model, y.minCoeff(), dim, config_.inner, derive_seed(seed, 4), extra);
}

void Optimizer::observe(const Vector& x_native, const Outcome& outcome) {
  auto it = std::find_if(pending_.begin(), pending_.end(), [&](const PendingPoint& p) {
    return p.x_native.size() == x_native.size() && p.x_native == x_native;
  });
  Vector x_unit;
  if (it != pending_.end()) {
    x_unit = it->x_unit;
    pending_.erase(it);
  } else {
    x_unit = space_.to_unit(x_native);
    ++external_;
    if (logger_) logger_("observation of a point that was never suggested; recording it as external data");
  }
  if (outcome.is_valid()) {
    dataset_.add(Observation::valid(std::move(x_unit), outcome.y()));
  } else {
    dataset_.add(Observation::invalid(std::move(x_unit)));
  }
  native_inputs_.push_back(x_native);
}

std::pair<Vector, double> Optimizer::best_observed() const {
  const auto best = dataset_.best_index();
  if (!best) throw std::logic_error("no valid observations yet");
  return {native_inputs_[*best], *dataset_.observations()[*best].y()};
}

std::optional<double> Optimizer::incumbent() const {
  const auto best = dataset_.best_index();
  if (!best) return std::nullopt;
  return *dataset_.observations()[*best].y();
}

std::size_t completions_before_suggestion(std::size_t index, int parallelism) {
  const auto p = static_cast<std::size_t>(parallelism);
  return index < p ? 0 : index - p + 1;
}

std::vector<RunRecord> run(const Problem& problem, const EngineConfig& config, int budget, int parallelism,
                           std::uint64_t seed, const RecordSink& sink) {
  if (parallelism < 1 || budget < parallelism) throw std::invalid_argument("run needs budget >= parallelism >= 1");
  Optimizer opt(problem.space, config, seed);

  struct InFlight {
    double finish;
    Suggestion suggestion;
    Outcome outcome;
  };
  auto later = [](const InFlight& a, const InFlight& b) {
    if (a.finish != b.finish) return a.finish > b.finish;
    return a.suggestion.index > b.suggestion.index;
  };
  std::priority_queue<InFlight, std::vector<InFlight>, decltype(later)> queue(later);
  double now = 0.0;

  auto issue = [&]() {
    Suggestion s = opt.suggest();
    const std::uint64_t eval_index = s.index;
    Outcome out = Outcome::invalid();
    try {
      out = problem.evaluate(s.x_native, eval_index);
    } catch (const std::exception&) {
      out = Outcome::invalid();
    }
    const double duration = problem.duration ? problem.duration(s.x_native, eval_index) : 1.0;
    queue.push(InFlight{now + duration, std::move(s), std::move(out)});
  };

  for (int i = 0; i < parallelism; ++i) issue();
  std::vector<RunRecord> records;
  records.reserve(static_cast<std::size_t>(budget));
  while (records.size() < static_cast<std::size_t>(budget)) {
    InFlight job = queue.top();
    queue.pop();
    now = job.finish;
    opt.observe(job.suggestion.x_native, job.outcome);
    RunRecord rec;
    rec.iteration = job.suggestion.index;
    rec.x_native = job.suggestion.x_native;
    rec.x_unit = job.suggestion.x_unit;
    rec.outcome = job.outcome;
    rec.wall_time = job.suggestion.seconds;
    rec.pending_at_suggest = job.suggestion.pending_before;
    rec.incumbent = opt.incumbent();
    if (sink) sink(rec);
    records.push_back(std::move(rec));
    if (opt.suggestions_issued() < static_cast<std::size_t>(budget)) issue();
  }
  return records;
}

}  // namespace dngo
