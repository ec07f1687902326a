#pragma once

#include <vector>

#include "hanslens/tensor.hpp"

namespace hanslens {

struct SymmetricEigen {
  std::vector<double> values;  // unsorted, aligned with columns of `vectors`
  Tensor vectors;              // orthonormal columns
};

// Cyclic Jacobi rotations. Stops once the off-diagonal Frobenius norm falls
// below 1e-12 times the diagonal norm.
SymmetricEigen jacobi_eigen(const Tensor& symmetric, int max_sweeps = 100);

// (S + shift I)^(-1/2) with eigenvalues of S clamped at zero first.
// Throws NumericalError when a shifted eigenvalue is not positive.
Tensor inverse_sqrt_shifted(const Tensor& symmetric, double shift);

// Uncentered second moment (1/N) sum_i f_i f_i^T of the rows of `features`.
Tensor second_moment(const Tensor& features);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor identity(std::size_t n);
double frobenius_norm(const Tensor& m);

}  // namespace hanslens
