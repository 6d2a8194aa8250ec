#pragma once

#include "dngo/domain.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dngo {

/// Result of one evaluation: a value, or invalid (constraint violated / crash).
class Outcome {
 public:
  static Outcome value(double y) { return Outcome(y); }
  static Outcome invalid() { return Outcome(std::nullopt); }

  bool is_valid() const noexcept { return y_.has_value(); }
  double y() const { return y_.value(); }
  const std::optional<double>& maybe_value() const noexcept { return y_; }

 private:
  explicit Outcome(std::optional<double> y) : y_(y) {}
  std::optional<double> y_;
};

/// Evaluator receives native coordinates and the global evaluation index
/// (noise streams are keyed by the index so concurrent calls stay deterministic).
using Evaluator = std::function<Outcome(const Vector& x_native, std::uint64_t eval_index)>;
using DurationModel = std::function<double(const Vector& x_native, std::uint64_t eval_index)>;

struct Problem {
  std::string name;
  ParameterSpace space;
  Evaluator evaluate;
  std::optional<double> known_optimum;
  DurationModel duration;  ///< empty means unit durations
};

inline constexpr double kBraninOptimum = 0.39788735772973816;
inline constexpr double kHartmann6Optimum = -3.3223680114155147;
/// Disk that keeps exactly one of Branin's three minimizers feasible.
inline constexpr double kConstraintCenterX1 = 3.14159265358979323846;
inline constexpr double kConstraintCenterX2 = 2.275;
inline constexpr double kConstraintRadius = 4.0;

/// Domain x1 in [-5, 10], x2 in [0, 15].
double branin(double x1, double x2);
/// Domain [0, 1]^6.
double hartmann6(const Vector& x);
/// Branin inside the constraint disk, invalid outside.
Outcome constrained_branin(const Vector& x);

Problem branin_problem();
Problem hartmann6_problem();
Problem constrained_branin_problem();

/// Adds i.i.d. N(0, sigma_noise^2) to every valid value, keyed by evaluation index.
Problem with_noise(Problem problem, double sigma_noise, std::uint64_t seed);

/// `branin`, `hartmann6`, `constrained-branin`; noise > 0 wraps with with_noise.
Problem make_problem(const std::string& name, double noise = 0.0, std::uint64_t noise_seed = 0);
std::vector<std::string> problem_names();

}  // namespace dngo
