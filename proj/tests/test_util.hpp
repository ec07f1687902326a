#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "hanslens/neural.hpp"
#include "hanslens/tensor.hpp"

namespace hanslens::testing {

// Scratch directories carry the pid so concurrent test runs never share one.
inline std::string process_tag() { return std::to_string(::getpid()); }

inline Tensor random_tensor(std::mt19937_64& eng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = u(eng);
  return t;
}

inline std::vector<Tensor> random_batch(std::mt19937_64& eng, std::size_t n, std::size_t d, double lo = -1.0,
                                        double hi = 1.0) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_tensor(eng, {d}, lo, hi));
  return out;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace hanslens::testing
