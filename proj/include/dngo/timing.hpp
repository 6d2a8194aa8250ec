#pragma once

#include "dngo/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace dngo {

struct TimingRow {
  std::string surrogate;
  int n = 0;
  int repeat = 0;
  double seconds = 0.0;
};

struct TimingConfig {
  std::vector<int> sizes{250, 500, 1000, 2000};
  int dim = 50;  ///< input dimension of the synthetic problem
  int repeats = 3;
  std::uint64_t seed = 0;
  EngineConfig engine;  ///< engine.surrogate selects the model being timed

  void validate() const;
};

/// Synthetic objective on the unit cube used for timing: sum_k sin(3 x_k) + (x_k - 0.5)^2.
double timing_objective(const Vector& x);

/// Wall time of one suggestion from an optimizer preloaded with N uniform random
/// observations of timing_objective in `dim` dimensions, for every N and repeat.
/// Strictly sequential.
std::vector<TimingRow> run_timing(const TimingConfig& config,
                                  const std::function<void(const TimingRow&)>& progress = {});

/// Least-squares slope of log(median seconds) against log N.
double loglog_slope(const std::vector<TimingRow>& rows);

/// Median seconds at one N.
double median_seconds(const std::vector<TimingRow>& rows, int n);

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

}  // namespace dngo
