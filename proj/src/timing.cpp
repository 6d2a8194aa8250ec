#include "dngo/timing.hpp"

#include "dngo/config.hpp"
#include "dngo/error.hpp"
#include "dngo/journal.hpp"
#include "dngo/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <new>
#include <stdexcept>

namespace dngo {

void TimingConfig::validate() const {
  if (sizes.empty()) throw std::invalid_argument("timing needs at least one N");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2) throw std::invalid_argument("timing sizes must be >= 2");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw std::invalid_argument("timing sizes must be strictly ascending");
  }
  if (dim < 1) throw std::invalid_argument("timing dimension must be >= 1");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  engine.validate();
}

double timing_objective(const Vector& x) {
  return (x.array() * 3.0).sin().sum() + (x.array() - 0.5).square().sum();
}

std::vector<TimingRow> run_timing(const TimingConfig& config, const std::function<void(const TimingRow&)>& progress) {
  config.validate();
  const ParameterSpace space = ParameterSpace::unit_cube(config.dim);
  std::vector<TimingRow> rows;
  for (int n : config.sizes) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(n)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Vector> xs;
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
      Vector x(config.dim);
      for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = unif(rng);
      ys.push_back(timing_objective(x));
      xs.push_back(std::move(x));
    }
    for (int r = 0; r < config.repeats; ++r) {
      try {
        Optimizer opt(space, config.engine, derive_seed(config.seed, 1000003ULL * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(r)));
        opt.set_logger({});
        for (int i = 0; i < n; ++i) opt.observe(xs[static_cast<std::size_t>(i)], Outcome::value(ys[static_cast<std::size_t>(i)]));
        const auto start = std::chrono::steady_clock::now();
        (void)opt.suggest();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back({to_string(config.engine.surrogate), n, r, secs});
        if (progress) progress(rows.back());
      } catch (const std::bad_alloc&) {
        throw Error("insufficient memory for the " + to_string(config.engine.surrogate) +
                    " surrogate at N = " + std::to_string(n));
      }
    }
  }
  return rows;
}

double median_seconds(const std::vector<TimingRow>& rows, int n) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.n == n) v.push_back(r.seconds);
  }
  if (v.empty()) throw std::invalid_argument("no timing rows for N = " + std::to_string(n));
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double loglog_slope(const std::vector<TimingRow>& rows) {
  std::map<int, bool> sizes;
  for (const auto& r : rows) sizes[r.n] = true;
  if (sizes.size() < 2) throw std::invalid_argument("slope needs at least two distinct N");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(sizes.size());
  for (const auto& [n, unused] : sizes) {
    const double x = std::log(static_cast<double>(n));
    const double y = std::log(median_seconds(rows, n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "surrogate,N,repeat,seconds\n";
  for (const auto& r : rows) out << r.surrogate << ',' << r.n << ',' << r.repeat << ',' << format_double(r.seconds) << '\n';
}

}  // namespace dngo
