#include "dngo/constraint_model.hpp"
#include "dngo/random.hpp"

#include <doctest.h>

using namespace dngo;

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct Toy {
  Matrix features;  // with bias column
  Vector labels;
};

Toy toy_problem(std::uint64_t seed, int n, int d) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector w(d + 1);
  for (int j = 0; j <= d; ++j) w[j] = 2.0 * g(rng);
  Toy t;
  t.features.resize(n, d + 1);
  t.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) t.features(i, j) = std::tanh(g(rng));
    t.features(i, d) = 1.0;
    t.labels[i] = u(rng) < sigmoid(t.features.row(i).dot(w)) ? 1.0 : 0.0;
  }
  return t;
}

double mc_prob(const LaplaceLogistic& l, const Vector& phi, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const Matrix cov = l.hessian.inverse();
  const Eigen::LLT<Matrix> chol(cov);
  const Matrix L = chol.matrixL();
  double acc = 0.0;
  Vector z(phi.size());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = g(rng);
    const Vector w = l.w_map + L * z;
    acc += sigmoid(l.scale * w.dot(phi));
  }
  return acc / n;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("constraint hyperparameter validation") {
  ConstraintHyperparams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.activation_scale() == 1.0);
  p.likelihood = ConstraintLikelihood::step_approx;
  CHECK(p.activation_scale() == doctest::Approx(100.0));
  p.weight_prior_precision = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("IRLS reaches a stationary point and decreases the objective") {
  const auto t = toy_problem(1, 60, 3);
  const auto fit = fit_laplace_logistic(t.features, t.labels, ConstraintHyperparams{});
  // Gradient of the negative log posterior at the MAP.
  Vector g = fit.w_map;
  for (Eigen::Index i = 0; i < t.features.rows(); ++i) {
    g += (sigmoid(t.features.row(i).dot(fit.w_map)) - t.labels[i]) * t.features.row(i).transpose();
  }
  CHECK(g.norm() < 1e-8);
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
    CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1]);
  }
  // Hessian is prior precision plus the logistic curvature.
  Matrix h = Matrix::Identity(4, 4);
  for (Eigen::Index i = 0; i < t.features.rows(); ++i) {
    const double p = sigmoid(t.features.row(i).dot(fit.w_map));
    h += p * (1.0 - p) * t.features.row(i).transpose() * t.features.row(i);
  }
  CHECK((h - fit.hessian).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("flipping every label negates the MAP weights") {
  const auto t = toy_problem(2, 40, 2);
  const auto a = fit_laplace_logistic(t.features, t.labels, ConstraintHyperparams{});
  const Vector flipped = Vector::Ones(t.labels.size()) - t.labels;
  const auto b = fit_laplace_logistic(t.features, flipped, ConstraintHyperparams{});
  CHECK((a.w_map + b.w_map).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((a.hessian - b.hessian).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("separable data converges under the prior") {
  Matrix f(4, 2);
  f << -1, 1, -0.5, 1, 0.5, 1, 1, 1;
  Vector y(4);
  y << 0, 0, 1, 1;
  const auto fit = fit_laplace_logistic(f, y, ConstraintHyperparams{});
  CHECK(fit.w_map.allFinite());
  CHECK(fit.w_map[0] > 0.0);
}

TEST_CASE("logistic-Gaussian expectation matches Monte Carlo") {
  Rng rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double mean : {-4.0, -1.0, 0.0, 0.7, 3.0}) {
    for (double var : {0.0, 0.01, 1.0, 9.0, 400.0}) {
      double acc = 0.0;
      const int n = 200000;
      for (int i = 0; i < n; ++i) acc += sigmoid(mean + std::sqrt(var) * g(rng));
      CHECK(std::abs(logistic_gaussian_expectation(mean, var) - acc / n) < 3e-3);
    }
  }
  CHECK(logistic_gaussian_expectation(0.0, 5.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(logistic_gaussian_expectation(1.3, 2.0) + logistic_gaussian_expectation(-1.3, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("Laplace predictive matches Monte Carlo over the weight posterior") {
  const auto t = toy_problem(4, 30, 3);
  const auto fit = fit_laplace_logistic(t.features, t.labels, ConstraintHyperparams{});
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    Vector phi(4);
    for (int j = 0; j < 3; ++j) phi[j] = std::tanh(g(rng));
    phi[3] = 1.0;
    double mean = 0.0, var = 0.0;
    fit.activation_moments(phi, mean, var);
    const double p = logistic_gaussian_expectation(mean, var);
    CHECK(std::abs(p - mc_prob(fit, phi, 100000, 10 + k)) < 0.006);
  }
}

TEST_CASE("fitted constraint model separates a feasible disk") {
  Dataset d(2);
  const ScrambledHalton h(2, 3);
  for (int i = 0; i < 60; ++i) {
    const Vector x = h.point(i);
    if ((x - vec2(0.5, 0.5)).norm() < 0.3) {
      d.add(Observation::valid(x, 1.0));
    } else {
      d.add(Observation::invalid(x));
    }
  }
  NetworkConfig net;
  net.layer_widths = {20, 20};
  net.epochs = 3000;
  const auto post = fit_constraint(d, ConstraintHyperparams{}, net, 9);
  const double inside = prob_valid(post, vec2(0.5, 0.5));
  const double outside = prob_valid(post, vec2(0.02, 0.98));
  CHECK(inside > 0.8);
  CHECK(outside < 0.1);
  const Matrix grid = h.points(100, 50);
  const Vector p = post.prob_valid(grid);
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.maxCoeff() <= 1.0);
  CHECK_THROWS_AS(prob_valid_noiseless(post, vec2(0.5, 0.5)), std::logic_error);
}

TEST_CASE("constraint features are standardized over the training inputs") {
  Dataset d(2);
  const ScrambledHalton h(2, 5);
  for (int i = 0; i < 30; ++i) {
    const Vector x = h.point(i);
    if (x[0] < 0.5) {
      d.add(Observation::valid(x, 0.0));
    } else {
      d.add(Observation::invalid(x));
    }
  }
  NetworkConfig net;
  net.layer_widths = {6, 4};
  net.epochs = 200;
  const auto post = fit_constraint(d, ConstraintHyperparams{}, net, 4);
  const Matrix f = post.augmented_features(d.all_inputs());
  const Vector mean = f.colwise().mean();
  CHECK(mean.head(4).cwiseAbs().maxCoeff() < 1e-12);
  for (int j = 0; j < 4; ++j) {
    const double var = (f.col(j).array() - mean[j]).square().mean();
    CHECK((var == doctest::Approx(1.0).epsilon(1e-12) || var < 1e-12));
  }
  CHECK((f.col(4).array() == 1.0).all());
  const Vector p = post.prob_valid(d.all_inputs());
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(prob_valid(post, d.all_inputs().row(i).transpose())));
  CHECK_THROWS_AS(ConstraintPosterior(post.basis_net(), post.layer(), post.hyperparams(), Vector::Zero(4), Vector::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("empty dataset gives the prior predictive of one half") {
  const auto post = fit_constraint(Dataset(2), ConstraintHyperparams{}, NetworkConfig{}, 1);
  CHECK(prob_valid(post, vec2(0.3, 0.9)) == doctest::Approx(0.5));
}

TEST_CASE("step likelihood orders a half-space constraint") {
  Dataset d(2);
  const ScrambledHalton h(2, 5);
  for (int i = 0; i < 40; ++i) {
    const Vector x = h.point(i);
    if (x[0] < 0.5) {
      d.add(Observation::valid(x, 0.0));
    } else {
      d.add(Observation::invalid(x));
    }
  }
  NetworkConfig net;
  net.layer_widths = {10, 10};
  net.epochs = 300;
  ConstraintHyperparams step;
  step.likelihood = ConstraintLikelihood::step_approx;
  const auto hard = fit_constraint(d, step, net, 2);
  const double inside = prob_valid_noiseless(hard, vec2(0.05, 0.5));
  const double outside = prob_valid_noiseless(hard, vec2(0.95, 0.5));
  CHECK(inside > 0.6);
  CHECK(outside < 0.4);
  const auto soft = fit_constraint(d, ConstraintHyperparams{}, net, 2);
  CHECK(prob_valid(soft, vec2(0.05, 0.5)) > 0.95);
  CHECK(prob_valid(soft, vec2(0.95, 0.5)) < 0.05);
}

TEST_CASE("step likelihood is label symmetric at the boundary") {
  const Toy t = toy_problem(4, 30, 2);
  ConstraintHyperparams step;
  step.likelihood = ConstraintLikelihood::step_approx;
  const auto a = fit_laplace_logistic(t.features, t.labels, step);
  const auto b = fit_laplace_logistic(t.features, Vector::Ones(t.labels.size()) - t.labels, step);
  for (int i = 0; i < 5; ++i) {
    double ma, va, mb, vb;
    a.activation_moments(t.features.row(i).transpose(), ma, va);
    b.activation_moments(t.features.row(i).transpose(), mb, vb);
    CHECK(logistic_gaussian_expectation(ma, va) == doctest::Approx(1.0 - logistic_gaussian_expectation(mb, vb)).epsilon(1e-8));
  }
  CHECK(logistic_gaussian_expectation(0.0, 7.0) == doctest::Approx(0.5).epsilon(1e-12));
}
