#pragma once

#include "dngo/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace dngo {

/// Everything needed to reproduce a run. Serialized as nested JSON objects whose
/// keys mirror the module configs; unknown keys are rejected.
struct RunConfig {
  std::string problem = "branin";
  int budget = 200;
  int parallelism = 1;
  std::uint64_t seed = 0;
  double noise = 0.0;
  int repeats = 1;
  EngineConfig engine;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Overlays `patch` onto `base`; missing keys keep the base value.
RunConfig parse_run_config(const nlohmann::json& patch, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});
nlohmann::json to_json(const RunConfig& config);

std::string to_string(Activation a);
std::string to_string(SurrogateKind s);
std::string to_string(ConstraintLikelihood c);
Activation parse_activation(const std::string& s);
SurrogateKind parse_surrogate(const std::string& s);
ConstraintLikelihood parse_constraint_likelihood(const std::string& s);

}  // namespace dngo
