#pragma once

#include "dngo/domain.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace dngo {

using Rng = std::mt19937_64;

/// Deterministically derive an independent stream seed from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Halton sequence with a random digit permutation per (dimension, digit).
/// Index 0 is a valid point; the sequence is fully determined by the seed.
class ScrambledHalton {
 public:
  ScrambledHalton(int dim, std::uint64_t seed);

  int dim() const noexcept { return dim_; }
  Vector point(std::uint64_t index) const;
  /// Rows are points first..first+count-1.
  Matrix points(std::uint64_t first, int count) const;

 private:
  int dim_;
  std::vector<int> bases_;
  std::vector<int> n_digits_;
  // perms_[d][digit * base + value]
  std::vector<std::vector<int>> perms_;
};

}  // namespace dngo
