#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace dngo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

/// Named, bounded, continuous search space. All modeling happens in the unit
/// hypercube; native coordinates only appear at the evaluation boundary.
class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<Dimension> dims);

  /// K-dimensional unit cube with dimensions named x0..x{K-1}.
  static ParameterSpace unit_cube(int k);

  int size() const noexcept { return static_cast<int>(dims_.size()); }
  const std::vector<Dimension>& dims() const noexcept { return dims_; }

  /// (x - lower) / (upper - lower), rejecting out-of-bounds input.
  Vector to_unit(const Vector& native) const;
  Vector from_unit(const Vector& unit) const;

  bool contains_native(const Vector& native) const;

 private:
  std::vector<Dimension> dims_;
};

Vector scale_to_unit(const ParameterSpace& space, const Vector& x_native);
Vector unscale(const ParameterSpace& space, const Vector& x_unit);

/// One evaluated point. Invalid observations never carry a value.
class Observation {
 public:
  static Observation valid(Vector x_unit, double y);
  static Observation invalid(Vector x_unit);

  const Vector& x_unit() const noexcept { return x_unit_; }
  const std::optional<double>& y() const noexcept { return y_; }
  bool is_valid() const noexcept { return y_.has_value(); }

 private:
  Observation(Vector x, std::optional<double> y);

  Vector x_unit_;
  std::optional<double> y_;
};

/// Multiset of observations, partitioned into the valid set V and invalid set I.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(int input_dim) : input_dim_(input_dim) {}

  void add(Observation obs);

  std::size_t size() const noexcept { return observations_.size(); }
  bool empty() const noexcept { return observations_.empty(); }
  std::size_t n_valid() const noexcept { return valid_.size(); }
  std::size_t n_invalid() const noexcept { return invalid_.size(); }
  int input_dim() const noexcept { return input_dim_; }

  const std::vector<Observation>& observations() const noexcept { return observations_; }
  const std::vector<std::size_t>& valid_indices() const noexcept { return valid_; }
  const std::vector<std::size_t>& invalid_indices() const noexcept { return invalid_; }

  /// Rows are the unit-cube inputs of V, in insertion order.
  Matrix valid_inputs() const;
  Vector valid_targets() const;
  /// All inputs (rows) and their 1/0 validity labels.
  Matrix all_inputs() const;
  Vector labels() const;

  /// Index of the lowest valid value; ties resolve to the earliest observation.
  std::optional<std::size_t> best_index() const;

 private:
  int input_dim_ = -1;
  std::vector<Observation> observations_;
  std::vector<std::size_t> valid_;
  std::vector<std::size_t> invalid_;
};

}  // namespace dngo
