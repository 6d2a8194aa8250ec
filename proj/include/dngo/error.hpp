#pragma once

#include <stdexcept>
#include <string>

namespace dngo {

/// Base class for runtime failures raised by the engine (as opposed to
/// precondition violations, which use the std::invalid_argument family).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix factorization or iterative solve broke down.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The slice sampler could not bracket or shrink onto the slice.
class SamplerError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration file or flag value. `key` is the dotted key path when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key_(key) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace dngo
