#include "dngo/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dngo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  for (int n = 2; static_cast<int>(primes.size()) < count; ++n) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > n) break;
      if (n % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(n);
  }
  return primes;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

ScrambledHalton::ScrambledHalton(int dim, std::uint64_t seed) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("Halton dimension must be >= 1");
  bases_ = first_primes(dim);
  Rng rng(derive_seed(seed, 0x4a17));
  for (int b : bases_) {
    // Enough digits to resolve double precision.
    const int digits = static_cast<int>(std::ceil(53.0 * std::log(2.0) / std::log(static_cast<double>(b))));
    n_digits_.push_back(digits);
    std::vector<int> perm(static_cast<std::size_t>(digits) * b);
    for (int k = 0; k < digits; ++k) {
      auto first = perm.begin() + static_cast<std::ptrdiff_t>(k) * b;
      std::iota(first, first + b, 0);
      std::shuffle(first, first + b, rng);
    }
    perms_.push_back(std::move(perm));
  }
}

Vector ScrambledHalton::point(std::uint64_t index) const {
  Vector x(dim_);
  for (int d = 0; d < dim_; ++d) {
    const int b = bases_[d];
    const auto& perm = perms_[d];
    std::uint64_t n = index;
    double scale = 1.0 / b;
    double value = 0.0;
    for (int k = 0; k < n_digits_[d]; ++k) {
      const int digit = static_cast<int>(n % static_cast<std::uint64_t>(b));
      n /= static_cast<std::uint64_t>(b);
      value += perm[static_cast<std::size_t>(k) * b + digit] * scale;
      scale /= b;
    }
    x[d] = std::min(value, 1.0);
  }
  return x;
}

Matrix ScrambledHalton::points(std::uint64_t first, int count) const {
  Matrix X(count, dim_);
  for (int i = 0; i < count; ++i) X.row(i) = point(first + static_cast<std::uint64_t>(i)).transpose();
  return X;
}

}  // namespace dngo
