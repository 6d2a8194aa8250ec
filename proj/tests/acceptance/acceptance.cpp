// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include "dngo/acquisition.hpp"
#include "dngo/bayes_linear.hpp"
#include "dngo/benchmarks.hpp"
#include "dngo/config.hpp"
#include "dngo/constraint_model.hpp"
#include "dngo/journal.hpp"
#include "dngo/neural_basis.hpp"
#include "dngo/random.hpp"
#include "dngo/timing.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

using namespace dngo;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Session {
  fs::path workdir;
  int seeds = 10;
  std::vector<std::string> journals;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s.precision(digits);
  s << v;
  return s.str();
}

void log(const std::string& msg) { std::cerr << msg << std::endl; }

std::vector<double> run_seeds(Session& session, const std::string& problem, int budget, int seeds) {
  std::vector<double> bests;
  const fs::path dir = session.workdir / "journals";
  fs::create_directories(dir);
  for (int s = 0; s < seeds; ++s) {
    RunConfig cfg;
    cfg.problem = problem;
    cfg.budget = budget;
    cfg.parallelism = 1;
    cfg.seed = static_cast<std::uint64_t>(s);
    const std::string path = (dir / journal_file_name(cfg)).string();
    const auto recs = run_to_journal(cfg, 0, path);
    session.journals.push_back(path);
    const double best = recs.back().incumbent ? *recs.back().incumbent : std::numeric_limits<double>::infinity();
    bests.push_back(best);
    log("  " + problem + " seed " + std::to_string(s) + ": best " + fmt(best, 8));
  }
  return bests;
}

Verdict branin_runs(Session& session) {
  const auto bests = run_seeds(session, "branin", 200, session.seeds);
  const auto hits = std::count_if(bests.begin(), bests.end(), [](double b) { return b <= 0.40; });
  double mean = 0.0;
  for (double b : bests) mean += b;
  mean /= static_cast<double>(bests.size());
  const long need = (9 * static_cast<long>(bests.size()) + 9) / 10;
  const bool pass = hits >= need && std::abs(mean - 0.3979) <= 0.01;
  return {pass, std::to_string(hits) + "/" + std::to_string(bests.size()) + " runs <= 0.40 (need " +
                    std::to_string(need) + "), mean best " + fmt(mean, 6) + " (need within 0.01 of 0.3979)"};
}

Verdict hartmann_runs(Session& session) {
  const auto bests = run_seeds(session, "hartmann6", 200, session.seeds);
  const auto n = static_cast<long>(bests.size());
  const auto hit325 = std::count_if(bests.begin(), bests.end(), [](double b) { return b <= -3.25; });
  const auto hit330 = std::count_if(bests.begin(), bests.end(), [](double b) { return b <= -3.30; });
  const long need325 = (8 * n + 9) / 10, need330 = (5 * n + 9) / 10;
  std::string all;
  for (double b : bests) all += (all.empty() ? "" : " ") + fmt(b, 5);
  return {hit325 >= need325 && hit330 >= need330,
          std::to_string(hit325) + "/" + std::to_string(n) + " runs <= -3.25 (need " + std::to_string(need325) + "), " +
              std::to_string(hit330) + "/" + std::to_string(n) + " <= -3.30 (need " + std::to_string(need330) +
              "); bests: " + all};
}

Verdict timing_scaling(Session& session) {
  TimingConfig tc;
  tc.sizes = {250, 500, 1000, 2000};
  tc.repeats = 3;
  std::vector<TimingRow> all;
  for (auto kind : {SurrogateKind::dngo, SurrogateKind::gp}) {
    tc.engine.surrogate = kind;
    const auto rows = run_timing(tc, [](const TimingRow& r) {
      log("  " + r.surrogate + " N=" + std::to_string(r.n) + " repeat " + std::to_string(r.repeat) + ": " +
          fmt(r.seconds, 4) + " s");
    });
    all.insert(all.end(), rows.begin(), rows.end());
  }
  std::vector<TimingRow> dngo_rows, gp_rows;
  for (const auto& r : all) (r.surrogate == "gp" ? gp_rows : dngo_rows).push_back(r);
  const double s_dngo = loglog_slope(dngo_rows), s_gp = loglog_slope(gp_rows);
  const double ratio = median_seconds(gp_rows, 2000) / median_seconds(dngo_rows, 2000);
  std::ofstream csv(session.workdir / "timing.csv", std::ios::binary);
  write_timing_csv(csv, all);
  return {s_dngo <= 1.5 && s_gp >= 2.0 && ratio >= 5.0,
          "slope dngo " + fmt(s_dngo, 4) + " (need <= 1.5), slope gp " + fmt(s_gp, 4) +
              " (need >= 2.0), gp/dngo time at N=2000 " + fmt(ratio, 4) + " (need >= 5)"};
}

Verdict blr_oracle(Session&) {
  double worst = 0.0;
  for (std::uint64_t inst = 0; inst < 100; ++inst) {
    Rng rng(derive_seed(2024, inst));
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 1 + static_cast<int>(rng() % 20), d = 1 + static_cast<int>(rng() % 5), k = 1 + static_cast<int>(rng() % 3);
    Matrix phi(n, d), X(n, k);
    Vector y(n);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = g(rng);
    RegressionHyperparams th = RegressionHyperparams::defaults(k);
    th.alpha = std::exp(1.5 * g(rng));
    th.beta = std::exp(1.5 * g(rng) + 1.0);
    th.lambda = g(rng);
    for (int j = 0; j < k; ++j) {
      th.quad_scales[j] = std::abs(g(rng));
      th.center[j] = u(rng);
    }
    const PosteriorState state = fit_posterior(phi, y, th, X);
    const Vector y_hat = y - prior_mean(th, X);
    const oracle::BlrOracle ref(phi, y_hat, th.alpha, th.beta);
    worst = std::max(worst, oracle::relative_error(state.log_marginal_likelihood(), ref.log_evidence()));
    worst = std::max(worst, oracle::relative_error(log_marginal_likelihood(phi, y, th, X), ref.log_evidence()));
    for (int t = 0; t < 3; ++t) {
      Vector ps(d), xs(k);
      for (int j = 0; j < d; ++j) ps[j] = g(rng);
      for (int j = 0; j < k; ++j) xs[j] = u(rng);
      const double eta = prior_mean(th, xs);
      const auto p = state.predict(ps, eta);
      const auto r = ref.predict(ps, eta);
      worst = std::max({worst, oracle::relative_error(p.mean, r.mean), oracle::relative_error(p.variance, r.variance)});
    }
  }
  return {worst < 1e-8, "worst relative error over 100 instances " + fmt(worst, 3) + " (need < 1e-8)"};
}

// Stratified Monte Carlo: one normal draw per equal-probability stratum.
double ei_stratified_mc(double mu, double sigma, double f_best, long n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sum = 0.0;
  for (long i = 0; i < n; ++i) {
    const double p = (static_cast<double>(i) + u(rng)) / static_cast<double>(n);
    const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
    sum += std::max(f_best - (mu + sigma * z), 0.0);
  }
  return sum / static_cast<double>(n);
}

Verdict ei_oracle(Session&) {
  double worst = 0.0;
  std::string detail;
  for (int gamma = -2; gamma <= 2; ++gamma) {
    const double mu = 0.3, sigma = 1.7, f_best = mu + sigma * gamma;
    const double mc = ei_stratified_mc(mu, sigma, f_best, 10'000'000, 77 + static_cast<std::uint64_t>(gamma + 2));
    const double rel = std::abs(expected_improvement(mu, sigma, f_best) - mc) / mc;
    worst = std::max(worst, rel);
    detail += (detail.empty() ? "" : ", ") + ("gamma " + std::to_string(gamma) + ": " + fmt(rel, 2));
  }
  return {worst < 1e-3, "relative error vs 1e7-sample stratified MC: " + detail + " (need < 1e-3)"};
}

Verdict gradient_checks(Session&) {
  double worst = 0.0;
  std::size_t max_params = 0;
  int done = 0;
  for (std::uint64_t inst = 0; done < 20; ++inst) {
    Rng rng(derive_seed(606, inst));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NetworkConfig c;
    c.layer_widths.clear();
    const int layers = 1 + static_cast<int>(rng() % 3);
    for (int l = 0; l < layers; ++l) c.layer_widths.push_back(2 + static_cast<int>(rng() % 5));
    c.activation = static_cast<Activation>(rng() % 3);
    const int k = 1 + static_cast<int>(rng() % 3);
    auto net = BasisNetwork::initialize(c, k, rng());
    if (net.params().count() > 100) continue;
    // Random biases keep ReLU pre-activations off the kink at zero.
    std::normal_distribution<double> normal(0.0, 0.7);
    Vector p(static_cast<Eigen::Index>(net.params().count()));
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = normal(rng);
    net.mutable_params().assign(p);
    max_params = std::max(max_params, net.params().count());
    const int n = 3 + static_cast<int>(rng() % 8);
    Matrix X(n, k);
    Vector y(n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
    const HeadLoss loss = inst % 2 ? HeadLoss::logistic : HeadLoss::squared_error;
    for (Eigen::Index i = 0; i < n; ++i) y[i] = loss == HeadLoss::logistic ? (u(rng) < 0.5 ? 0.0 : 1.0) : u(rng);
    const double l2 = 1e-3 * (1 + static_cast<double>(inst % 3));
    const Vector g = loss_and_gradient(net, X, y, l2, loss).gradient.flatten();
    const Vector fd = oracle::finite_difference_gradient(net, X, y, l2, loss);
    const double err = (g - fd).norm() / std::max(g.norm(), fd.norm());
    if (err > 1e-6) log("  net " + std::to_string(inst) + " activation " + std::to_string(static_cast<int>(c.activation)) + ": " + fmt(err, 3));
    worst = std::max(worst, err);
    ++done;
  }
  return {worst < 1e-6, "worst relative error over 20 nets (up to " + std::to_string(max_params) +
                            " parameters) " + fmt(worst, 3) + " (need < 1e-6)"};
}

double laplace_mc(const LaplaceLogistic& l, const Vector& phi, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const Matrix L = Eigen::LLT<Matrix>(l.hessian.inverse()).matrixL();
  Vector z(phi.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = g(rng);
    acc += 1.0 / (1.0 + std::exp(-l.scale * (l.w_map + L * z).dot(phi)));
  }
  return acc / n;
}

Verdict constraint_checks(Session& session) {
  double worst = 0.0;
  int points = 0;
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    Rng rng(derive_seed(31337, inst));
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int d = 2 + static_cast<int>(inst % 3), n = 25;
    Vector w_true(d + 1);
    for (int j = 0; j <= d; ++j) w_true[j] = 2.0 * g(rng);
    Matrix feats(n, d + 1);
    Vector labels(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) feats(i, j) = std::tanh(g(rng));
      feats(i, d) = 1.0;
      labels[i] = u(rng) < 1.0 / (1.0 + std::exp(-feats.row(i).dot(w_true))) ? 1.0 : 0.0;
    }
    const auto fit = fit_laplace_logistic(feats, labels, ConstraintHyperparams{});
    for (int t = 0; t < 20; ++t, ++points) {
      Vector phi(d + 1);
      for (int j = 0; j < d; ++j) phi[j] = std::tanh(1.5 * g(rng));
      phi[d] = 1.0;
      double m = 0.0, v = 0.0;
      fit.activation_moments(phi, m, v);
      const double p = logistic_gaussian_expectation(m, v);
      worst = std::max(worst, std::abs(p - laplace_mc(fit, phi, 100000, derive_seed(inst, t))));
    }
  }

  // Constrained Branin: feasibility of model-based suggestions.
  const fs::path dir = session.workdir / "journals";
  fs::create_directories(dir);
  int feasible = 0, model_based = 0;
  std::string per_seed;
  for (std::uint64_t s = 0; s < 3; ++s) {
    RunConfig cfg;
    cfg.problem = "constrained-branin";
    cfg.budget = 100;
    cfg.seed = s;
    const std::string path = (dir / journal_file_name(cfg)).string();
    const auto recs = run_to_journal(cfg, 0, path);
    session.journals.push_back(path);
    const auto design = static_cast<std::size_t>(cfg.engine.design_size(2));
    int f = 0, m = 0;
    for (const auto& r : recs) {
      if (r.iteration < design) continue;
      ++m;
      f += r.outcome.is_valid() ? 1 : 0;
    }
    feasible += f;
    model_based += m;
    per_seed += (per_seed.empty() ? "" : ", ") + std::to_string(f) + "/" + std::to_string(m);
    log("  constrained-branin seed " + std::to_string(s) + ": " + std::to_string(f) + "/" + std::to_string(m) +
        " model-based suggestions feasible");
  }
  const double frac = static_cast<double>(feasible) / model_based;
  return {worst <= 0.01 && frac >= 0.70,
          "Laplace vs MC max deviation " + fmt(worst, 3) + " over " + std::to_string(points) +
              " points (need <= 0.01); feasible model-based suggestions " + fmt(100.0 * frac, 4) + "% [" + per_seed +
              "] (need >= 70%)"};
}

struct ToyContext {
  AcquisitionContext ctx;
  Matrix X;
  Vector y;
};

ToyContext toy_context(int k, int n, std::uint64_t seed) {
  ToyContext t;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  t.X.resize(n, k);
  t.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) t.X(i, j) = u(rng);
    t.y[i] = std::sin(5.0 * t.X.row(i).sum()) + 0.2 * t.X(i, 0);
  }
  NetworkConfig nc;
  nc.layer_widths = {8, 5};
  nc.epochs = 300;
  auto trained = train_map(nc, t.X, t.y, seed);
  t.ctx.basis = std::make_shared<BasisNetwork>(std::move(trained.network));
  const Matrix phi = t.ctx.basis->features(t.X);
  auto thetas = slice_sample_hyperparams(phi, t.y, t.X, RegressionHyperparams::defaults(k), SamplerConfig{}, seed + 1);
  for (const auto& th : thetas) t.ctx.samples.push_back({th, fit_posterior(phi, t.y, th, t.X)});
  t.ctx.f_best = t.y.minCoeff();
  return t;
}

Verdict fantasy_consistency(Session&) {
  // Without pending points the fantasy machinery must reduce to the plain average.
  ToyContext t = toy_context(2, 12, 5);
  const IntegratedAcquisition acq(t.ctx, 3);
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    Vector x(2);
    x << u(rng), u(rng);
    double acc = 0.0;
    for (std::size_t s = 0; s < t.ctx.samples.size(); ++s) acc += constrained_ei(x, t.ctx, s);
    acc /= static_cast<double>(t.ctx.samples.size());
    if (acq(x) != acc) ++mismatches;
  }
  ToyContext one = toy_context(1, 8, 9);
  one.ctx.samples.erase(one.ctx.samples.begin() + 1, one.ctx.samples.end());
  const IntegratedAcquisition single(one.ctx, 4);
  const auto& s0 = one.ctx.samples[0];
  for (int i = 0; i <= 100; ++i) {
    const Vector x = Vector::Constant(1, i / 100.0);
    const Matrix xm = x.transpose();
    Vector mean, var;
    s0.state.predict(one.ctx.basis->features(xm), prior_mean(s0.theta, xm), mean, var);
    if (single(x) != expected_improvement(mean[0], std::sqrt(var[0]), *one.ctx.f_best)) ++mismatches;
  }

  // Two pending points on a 1-D toy against nested Monte Carlo.
  one.ctx.pending = {Vector::Constant(1, 0.35), Vector::Constant(1, 0.8)};
  one.ctx.n_fantasies = 20000;
  const IntegratedAcquisition fant(one.ctx, 12);
  Matrix P(2, 1);
  P << 0.35, 0.8;
  Vector xs = Vector::Constant(1, 0.0);
  for (int i = 0; i <= 100; ++i) {
    const Vector x = Vector::Constant(1, i / 100.0);
    if (single(x) > single(xs)) xs = x;
  }
  const Matrix xm = xs.transpose();
  const auto ref = oracle::fantasy_ei_monte_carlo(
      s0.state.design(), s0.state.residual_targets(), s0.theta.alpha, s0.theta.beta, one.ctx.basis->features(P),
      prior_mean(s0.theta, P), one.ctx.basis->features(xs), prior_mean(s0.theta, xm)[0], *one.ctx.f_best, 100000, 99);
  const double se = ref.sd * std::sqrt(1.0 / 20000.0 + 1.0 / 100000.0);
  const double got = fant(xs);
  const double z = std::abs(got - ref.mean) / se;
  return {mismatches == 0 && z <= 2.0, "J=0 bitwise mismatches " + std::to_string(mismatches) +
                                           " of 1101 (need 0); J=2 acquisition " + fmt(got, 6) + " vs nested MC " +
                                           fmt(ref.mean, 6) + ", " + fmt(z, 3) + " standard errors (need <= 2)"};
}

Verdict activation_study(Session&) {
  const int n = 12;
  Matrix X(n, 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = i / (n - 1.0);
    y[i] = std::sin(7.0 * X(i, 0)) + 0.5 * X(i, 0);
  }
  y = (y.array() - y.mean()) / std::sqrt((y.array() - y.mean()).square().mean());
  const Vector x_out = Vector::Constant(1, 1.5);
  auto extrapolated_sd = [&](Activation act, std::uint64_t seed, double* feature_sup) {
    NetworkConfig nc;
    nc.activation = act;
    const auto net = train_map(nc, X, y, seed).network;
    const Matrix phi = net.features(X);
    const auto thetas = slice_sample_hyperparams(phi, y, X, RegressionHyperparams::defaults(1), SamplerConfig{}, seed + 7);
    double sd = 0.0;
    for (const auto& th : thetas) {
      const auto p = fit_posterior(phi, y, th, X).predict(net.features(x_out), prior_mean(th, x_out));
      sd += std::sqrt(p.variance);
    }
    if (feature_sup) {
      Rng rng(seed);
      std::uniform_real_distribution<double> u(-50.0, 50.0);
      Matrix probe(10000, 1);
      for (Eigen::Index i = 0; i < probe.rows(); ++i) probe(i, 0) = u(rng);
      *feature_sup = net.features(probe).cwiseAbs().maxCoeff();
    }
    return sd / static_cast<double>(thetas.size());
  };
  int holds = 0;
  double sup = 0.0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double s = 0.0;
    const double tanh_sd = extrapolated_sd(Activation::tanh_all, seed, &s);
    const double relu_sd = extrapolated_sd(Activation::relu_all, seed, nullptr);
    sup = std::max(sup, s);
    holds += relu_sd >= tanh_sd ? 1 : 0;
    detail += (detail.empty() ? "" : ", ") + fmt(relu_sd, 3) + " vs " + fmt(tanh_sd, 3);
  }
  return {holds == 5 && sup <= 1.0, "relu_all >= tanh_all extrapolative sd in " + std::to_string(holds) +
                                        "/5 seeds [" + detail + "] (need 5/5); max |tanh feature| " + fmt(sup, 17) +
                                        " (need <= 1)"};
}

Verdict replay_all(Session& session) {
  if (session.journals.empty()) return {false, "no journals were produced in this session"};
  int ok = 0;
  std::string failures;
  for (const auto& path : session.journals) {
    const auto report = replay(read_journal(path));
    if (report.ok) {
      ++ok;
    } else {
      failures += " " + fs::path(path).filename().string() + ": " + report.message;
    }
    log("  replay " + fs::path(path).filename().string() + ": " + report.message);
  }
  const auto n = session.journals.size();
  return {ok == static_cast<int>(n), std::to_string(ok) + "/" + std::to_string(n) + " journals replay exactly" + failures};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  Session session;
  std::string workdir = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Directory for journals and timing output");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--seeds", session.seeds, "Seeded runs for the benchmark criteria")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  session.workdir = workdir;
  fs::create_directories(session.workdir);

  using Check = Verdict (*)(Session&);
  const std::vector<std::pair<const char*, Check>> criteria{
      {"branin benchmark", branin_runs},
      {"hartmann6 benchmark", hartmann_runs},
      {"per-suggestion time scaling", timing_scaling},
      {"bayesian linear oracle", blr_oracle},
      {"expected improvement oracle", ei_oracle},
      {"backprop gradient checks", gradient_checks},
      {"constraint model", constraint_checks},
      {"fantasy consistency", fantasy_consistency},
      {"activation study", activation_study},
      {"replay determinism", replay_all},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    log("running criterion " + std::to_string(id) + " (" + criteria[i].first + ")");
    Verdict v;
    try {
      v = criteria[i].second(session);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
