#include "dngo/domain.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace dngo {

namespace {

void check_dim(const ParameterSpace& space, const Vector& x) {
  if (x.size() != space.size()) {
    throw std::invalid_argument("point has " + std::to_string(x.size()) +
                                " coordinates, space has " + std::to_string(space.size()));
  }
}

}  // namespace

ParameterSpace::ParameterSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("parameter space needs at least one dimension");
  for (const auto& d : dims_) {
    if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper)) {
      throw std::invalid_argument("dimension '" + d.name + "' needs finite lower < upper");
    }
  }
}

ParameterSpace ParameterSpace::unit_cube(int k) {
  if (k < 1) throw std::invalid_argument("unit cube needs k >= 1");
  std::vector<Dimension> dims;
  dims.reserve(k);
  for (int i = 0; i < k; ++i) dims.push_back({"x" + std::to_string(i), 0.0, 1.0});
  return ParameterSpace(std::move(dims));
}

bool ParameterSpace::contains_native(const Vector& native) const {
  if (native.size() != size()) return false;
  for (int i = 0; i < size(); ++i) {
    if (!(native[i] >= dims_[i].lower && native[i] <= dims_[i].upper)) return false;
  }
  return true;
}

Vector ParameterSpace::to_unit(const Vector& native) const {
  check_dim(*this, native);
  Vector out(size());
  for (int i = 0; i < size(); ++i) {
    const auto& d = dims_[i];
    if (!(native[i] >= d.lower && native[i] <= d.upper)) {
      throw std::out_of_range("coordinate '" + d.name + "' outside [lower, upper]");
    }
    out[i] = (native[i] - d.lower) / (d.upper - d.lower);
  }
  return out;
}

Vector ParameterSpace::from_unit(const Vector& unit) const {
  check_dim(*this, unit);
  Vector out(size());
  for (int i = 0; i < size(); ++i) {
    if (!(unit[i] >= 0.0 && unit[i] <= 1.0)) {
      throw std::out_of_range("unit coordinate " + std::to_string(i) + " outside [0, 1]");
    }
    const auto& d = dims_[i];
    // Pin the endpoints so the bounds come back exactly.
    if (unit[i] == 0.0) {
      out[i] = d.lower;
    } else if (unit[i] == 1.0) {
      out[i] = d.upper;
    } else {
      out[i] = d.lower + unit[i] * (d.upper - d.lower);
    }
  }
  return out;
}

Vector scale_to_unit(const ParameterSpace& space, const Vector& x_native) {
  return space.to_unit(x_native);
}

Vector unscale(const ParameterSpace& space, const Vector& x_unit) { return space.from_unit(x_unit); }

Observation::Observation(Vector x, std::optional<double> y) : x_unit_(std::move(x)), y_(y) {
  for (Eigen::Index i = 0; i < x_unit_.size(); ++i) {
    if (!(x_unit_[i] >= 0.0 && x_unit_[i] <= 1.0)) {
      throw std::out_of_range("observation input outside the unit cube");
    }
  }
}

Observation Observation::valid(Vector x_unit, double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("valid observation needs a finite value");
  return Observation(std::move(x_unit), y);
}

Observation Observation::invalid(Vector x_unit) { return Observation(std::move(x_unit), std::nullopt); }

void Dataset::add(Observation obs) {
  if (input_dim_ < 0) input_dim_ = static_cast<int>(obs.x_unit().size());
  if (obs.x_unit().size() != input_dim_) {
    throw std::invalid_argument("observation dimension does not match dataset");
  }
  (obs.is_valid() ? valid_ : invalid_).push_back(observations_.size());
  observations_.push_back(std::move(obs));
}

Matrix Dataset::valid_inputs() const {
  Matrix X(static_cast<Eigen::Index>(valid_.size()), std::max(input_dim_, 0));
  for (std::size_t r = 0; r < valid_.size(); ++r) X.row(r) = observations_[valid_[r]].x_unit().transpose();
  return X;
}

Vector Dataset::valid_targets() const {
  Vector y(static_cast<Eigen::Index>(valid_.size()));
  for (std::size_t r = 0; r < valid_.size(); ++r) y[r] = *observations_[valid_[r]].y();
  return y;
}

Matrix Dataset::all_inputs() const {
  Matrix X(static_cast<Eigen::Index>(observations_.size()), std::max(input_dim_, 0));
  for (std::size_t r = 0; r < observations_.size(); ++r) X.row(r) = observations_[r].x_unit().transpose();
  return X;
}

Vector Dataset::labels() const {
  Vector c(static_cast<Eigen::Index>(observations_.size()));
  for (std::size_t r = 0; r < observations_.size(); ++r) c[r] = observations_[r].is_valid() ? 1.0 : 0.0;
  return c;
}

std::optional<std::size_t> Dataset::best_index() const {
  std::optional<std::size_t> best;
  for (auto i : valid_) {
    if (!best || *observations_[i].y() < *observations_[*best].y()) best = i;
  }
  return best;
}

}  // namespace dngo
