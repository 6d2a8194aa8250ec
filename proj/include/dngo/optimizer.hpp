#pragma once

#include "dngo/acquisition.hpp"
#include "dngo/bayes_linear.hpp"
#include "dngo/benchmarks.hpp"
#include "dngo/constraint_model.hpp"
#include "dngo/domain.hpp"
#include "dngo/neural_basis.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dngo {

enum class SurrogateKind { dngo, gp };

struct EngineConfig {
  /// Quasi-random points issued before the first model-based suggestion; 0 means 2K.
  int initial_design = 0;
  SurrogateKind surrogate = SurrogateKind::dngo;
  NetworkConfig network;
  SamplerConfig sampler;
  InnerOptimizerConfig inner;
  int n_fantasies = 10;
  ConstraintHyperparams constraint;
  /// Training epochs of the constraint network; its other settings follow `network`.
  int constraint_epochs = 3000;

  void validate() const;
  int design_size(int input_dim) const { return initial_design > 0 ? initial_design : 2 * input_dim; }
};

struct Suggestion {
  std::size_t index = 0;  ///< position in the sequence of suggestions
  Vector x_unit;
  Vector x_native;
  bool from_design = false;
  std::size_t pending_before = 0;
  double seconds = 0.0;  ///< wall time spent producing the suggestion
};

struct PendingPoint {
  std::size_t index;
  Vector x_unit;
  Vector x_native;
};

/// Owns the dataset and pending set and produces suggestions. Single owner;
/// suggest/observe must be serialized by the caller.
class Optimizer {
 public:
  Optimizer(ParameterSpace space, EngineConfig config, std::uint64_t seed);

  /// Next point to evaluate (added to the pending set). Deterministic given the
  /// seed and the sequence of observations.
  Suggestion suggest();

  /// Records an outcome. Pending points leave the pending set; other points are
  /// accepted as external data and reported through the logger.
  void observe(const Vector& x_native, const Outcome& outcome);

  /// Lowest valid observation (native x, value); earliest wins ties.
  std::pair<Vector, double> best_observed() const;
  std::optional<double> incumbent() const;

  const ParameterSpace& space() const noexcept { return space_; }
  const EngineConfig& config() const noexcept { return config_; }
  const Dataset& dataset() const noexcept { return dataset_; }
  const std::vector<PendingPoint>& pending() const noexcept { return pending_; }
  std::size_t suggestions_issued() const noexcept { return issued_; }
  std::size_t external_observations() const noexcept { return external_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Training loss and hyperparameter samples of the most recent model-based suggestion.
  double last_training_loss() const noexcept { return last_training_loss_; }
  const std::vector<RegressionHyperparams>& last_theta_samples() const noexcept { return last_thetas_; }

  void set_logger(std::function<void(const std::string&)> logger) { logger_ = std::move(logger); }

 private:
  Vector dngo_suggestion(std::uint64_t seed);
  Vector gp_suggestion(std::uint64_t seed);

  ParameterSpace space_;
  EngineConfig config_;
  std::uint64_t seed_;
  Dataset dataset_;
  std::vector<Vector> native_inputs_;
  std::vector<PendingPoint> pending_;
  std::size_t issued_ = 0;
  std::size_t design_issued_ = 0;
  std::size_t external_ = 0;
  std::optional<RegressionHyperparams> warm_theta_;
  std::vector<RegressionHyperparams> last_thetas_;
  double last_training_loss_ = 0.0;
  std::function<void(const std::string&)> logger_;
};

/// One completed evaluation in a closed-loop run.
struct RunRecord {
  std::size_t iteration = 0;  ///< suggestion index
  Vector x_native;
  Vector x_unit;
  Outcome outcome = Outcome::invalid();
  double wall_time = 0.0;  ///< suggestion cost in seconds (evaluator time excluded)
  std::size_t pending_at_suggest = 0;
  std::optional<double> incumbent;  ///< best valid value after this observation
};

using RecordSink = std::function<void(const RunRecord&)>;

/// Simulated asynchronous run: keeps `parallelism` evaluations in flight, finishes
/// them in order of simulated completion time, and stops after `budget` outcomes.
/// Evaluator exceptions become invalid observations.
std::vector<RunRecord> run(const Problem& problem, const EngineConfig& config, int budget, int parallelism,
                           std::uint64_t seed, const RecordSink& sink = {});

/// Number of completed observations before suggestion `index` is issued.
std::size_t completions_before_suggestion(std::size_t index, int parallelism);

}  // namespace dngo
