#include "dngo/benchmarks.hpp"

#include "dngo/random.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dngo {

namespace {

constexpr std::array<double, 4> kHartmannAlpha{1.0, 1.2, 3.0, 3.2};

constexpr std::array<std::array<double, 6>, 4> kHartmannA{{
    {10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
    {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
    {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
    {17.0, 8.0, 0.05, 10.0, 0.1, 14.0},
}};

constexpr std::array<std::array<double, 6>, 4> kHartmannP{{
    {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
    {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
    {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
    {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381},
}};

}  // namespace

double branin(double x1, double x2) {
  if (!(x1 >= -5.0 && x1 <= 10.0 && x2 >= 0.0 && x2 <= 15.0)) {
    throw std::out_of_range("branin input outside [-5, 10] x [0, 15]");
  }
  constexpr double pi = std::numbers::pi;
  constexpr double b = 5.1 / (4.0 * pi * pi);
  constexpr double c = 5.0 / pi;
  constexpr double t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

double hartmann6(const Vector& x) {
  if (x.size() != 6) throw std::invalid_argument("hartmann6 takes 6 coordinates");
  if ((x.array() < 0.0).any() || (x.array() > 1.0).any()) throw std::out_of_range("hartmann6 input outside [0,1]^6");
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      const double d = x[static_cast<Eigen::Index>(j)] - kHartmannP[i][j];
      inner += kHartmannA[i][j] * d * d;
    }
    total += kHartmannAlpha[i] * std::exp(-inner);
  }
  return -total;
}

Outcome constrained_branin(const Vector& x) {
  if (x.size() != 2) throw std::invalid_argument("constrained_branin takes 2 coordinates");
  const double dx = x[0] - kConstraintCenterX1;
  const double dy = x[1] - kConstraintCenterX2;
  if (dx * dx + dy * dy > kConstraintRadius * kConstraintRadius) return Outcome::invalid();
  return Outcome::value(branin(x[0], x[1]));
}

Problem branin_problem() {
  return Problem{"branin",
                 ParameterSpace({{"x1", -5.0, 10.0}, {"x2", 0.0, 15.0}}),
                 [](const Vector& x, std::uint64_t) { return Outcome::value(branin(x[0], x[1])); },
                 kBraninOptimum,
                 {}};
}

Problem hartmann6_problem() {
  return Problem{"hartmann6",
                 ParameterSpace::unit_cube(6),
                 [](const Vector& x, std::uint64_t) { return Outcome::value(hartmann6(x)); },
                 kHartmann6Optimum,
                 {}};
}

Problem constrained_branin_problem() {
  return Problem{"constrained-branin",
                 ParameterSpace({{"x1", -5.0, 10.0}, {"x2", 0.0, 15.0}}),
                 [](const Vector& x, std::uint64_t) { return constrained_branin(x); },
                 kBraninOptimum,
                 {}};
}

Problem with_noise(Problem problem, double sigma_noise, std::uint64_t seed) {
  if (!(sigma_noise >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
  if (sigma_noise == 0.0) return problem;
  auto inner = problem.evaluate;
  problem.evaluate = [inner, sigma_noise, seed](const Vector& x, std::uint64_t index) {
    Outcome out = inner(x, index);
    if (!out.is_valid()) return out;
    Rng rng(derive_seed(seed, index));
    std::normal_distribution<double> normal(0.0, sigma_noise);
    return Outcome::value(out.y() + normal(rng));
  };
  return problem;
}

std::vector<std::string> problem_names() { return {"branin", "hartmann6", "constrained-branin"}; }

Problem make_problem(const std::string& name, double noise, std::uint64_t noise_seed) {
  Problem p = [&]() {
    if (name == "branin") return branin_problem();
    if (name == "hartmann6") return hartmann6_problem();
    if (name == "constrained-branin") return constrained_branin_problem();
    throw std::invalid_argument("unknown problem '" + name + "'");
  }();
  return with_noise(std::move(p), noise, noise_seed);
}

}  // namespace dngo
