#include "dngo/gp_baseline.hpp"
#include "dngo/random.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace dngo;

namespace {

Matrix uniform_points(std::uint64_t seed, int n, int d) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
  return X;
}

}  // namespace

TEST_CASE("GP predictions match dense conditioning") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int n = 3 + static_cast<int>(seed % 15), d = 1 + static_cast<int>(seed % 4);
    const Matrix X = uniform_points(seed, n, d);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(3.0 * X.row(i).sum());
    KernelParams kp = KernelParams::median_heuristic(X, 1.3, 1e-3);
    const GPModel gp = gp_fit(X, y, kp);
    const Matrix T = uniform_points(seed + 100, 5, d);
    Vector mean, var;
    gp.predict(T, mean, var);
    for (int t = 0; t < 5; ++t) {
      const auto ref = oracle::gp_condition(X, y, kp.lengthscales, 1.3, 1e-3, T.row(t).transpose());
      const auto one = gp.predict(T.row(t).transpose());
      CHECK(oracle::relative_error(mean[t], ref.mean) < 1e-8);
      CHECK(oracle::relative_error(var[t], ref.variance) < 1e-8);
      CHECK(one.mean == doctest::Approx(mean[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("GP with one observation interpolates it") {
  Matrix X(1, 2);
  X << 0.3, 0.6;
  const Vector y = Vector::Constant(1, 2.0);
  KernelParams kp;
  kp.lengthscales = Vector::Constant(2, 0.2);
  kp.noise_variance = 1e-8;
  const GPModel gp(X, y, kp);
  const auto p = gp.predict(X.row(0).transpose());
  CHECK(p.mean == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(p.variance < 1e-6);
  const auto far = gp.predict(Vector::Constant(2, 10.0));
  CHECK(far.mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(far.variance == doctest::Approx(1.0 + 1e-8));
}

TEST_CASE("kernel parameter validation") {
  KernelParams kp;
  kp.lengthscales = Vector::Constant(2, 0.0);
  CHECK_THROWS_AS(kp.validate(), std::invalid_argument);
  kp.lengthscales = Vector::Constant(2, 0.5);
  kp.signal_variance = 0.0;
  CHECK_THROWS_AS(kp.validate(), std::invalid_argument);
  kp.signal_variance = 1.0;
  CHECK_THROWS_AS(GPModel(Matrix(0, 2), Vector(0), kp), std::invalid_argument);
  CHECK_THROWS_AS(GPModel(Matrix::Zero(2, 3), Vector::Zero(2), kp), std::invalid_argument);
}

TEST_CASE("median heuristic lengthscales") {
  Matrix X(3, 2);
  X << 0.0, 0.0, 0.2, 0.0, 0.6, 0.0;
  const auto kp = KernelParams::median_heuristic(X);
  CHECK(kp.lengthscales[0] == doctest::Approx(0.4));
  CHECK(kp.lengthscales[1] == doctest::Approx(1e-3));
}

TEST_CASE("duplicate inputs without noise still factor") {
  Matrix X(2, 1);
  X << 0.5, 0.5;
  KernelParams kp;
  kp.lengthscales = Vector::Constant(1, 0.3);
  kp.noise_variance = 0.0;
  const GPModel gp(X, Vector::Constant(2, 1.0), kp);
  CHECK(gp.jitter() > 0.0);
  CHECK(gp.predict(X.row(0).transpose()).mean == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("GP suggestion maximizes EI and is deterministic") {
  const Matrix X = uniform_points(7, 12, 2);
  Vector y(12);
  for (int i = 0; i < 12; ++i) y[i] = (X.row(i).array() - 0.4).square().sum();
  const GPModel gp = gp_fit(X, y, KernelParams::median_heuristic(X));
  InnerOptimizerConfig cfg;
  const Vector x = gp_suggest(gp, y.minCoeff(), 2, cfg, 3);
  CHECK(x == gp_suggest(gp, y.minCoeff(), 2, cfg, 3));
  CHECK(x.minCoeff() >= 0.0);
  CHECK(x.maxCoeff() <= 1.0);
  const Matrix H = ScrambledHalton(2, 99).points(0, 500);
  Vector mean, var;
  gp.predict(H, mean, var);
  const auto px = gp.predict(x);
  const double ei_x = expected_improvement(px.mean, std::sqrt(px.variance), y.minCoeff());
  for (int i = 0; i < 500; ++i) {
    CHECK(ei_x >= expected_improvement(mean[i], std::sqrt(var[i]), y.minCoeff()) - 1e-12);
  }
}
