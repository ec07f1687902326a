#include "hanslens/linalg.hpp"

#include <cmath>

#include "hanslens/error.hpp"

namespace hanslens {

Tensor identity(std::size_t n) {
  Tensor m({n, n});
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) throw ShapeError("matmul: inner extents differ");
  Tensor c({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) c.at(i, j) += aip * b.at(p, j);
    }
  return c;
}

double frobenius_norm(const Tensor& m) { return std::sqrt(squared_norm(m.values())); }

SymmetricEigen jacobi_eigen(const Tensor& symmetric, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw ShapeError("jacobi_eigen: matrix is not square");
  if (!symmetric.all_finite()) throw NumericalError("jacobi_eigen: non-finite entries");

  Tensor a = symmetric;
  // Work on the symmetric part so tiny asymmetries cannot stall convergence.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a.at(i, j) + a.at(j, i));
      a.at(i, j) = a.at(j, i) = s;
    }
  Tensor v = identity(n);

  auto converged = [&] {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double x = a.at(i, j) * a.at(i, j);
        (i == j ? diag : off) += x;
      }
    return std::sqrt(off) <= 1e-12 * std::sqrt(diag) || off == 0.0;
  };

  int sweep = 0;
  for (; sweep < max_sweeps && !converged(); ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
  }
  if (!converged()) throw NumericalError("jacobi_eigen: no convergence after " + std::to_string(sweep) + " sweeps");

  SymmetricEigen e{std::vector<double>(n), std::move(v)};
  for (std::size_t i = 0; i < n; ++i) e.values[i] = a.at(i, i);
  return e;
}

Tensor inverse_sqrt_shifted(const Tensor& symmetric, double shift) {
  if (!(shift >= 0.0)) throw ConfigError("whitening shift must be non-negative");
  const auto e = jacobi_eigen(symmetric);
  const std::size_t n = e.values.size();
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = std::max(0.0, e.values[i]) + shift;
    if (!(lam > 0.0)) throw NumericalError("whitening: singular second moment with zero shift");
    scale[i] = 1.0 / std::sqrt(lam);
  }
  Tensor w({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += e.vectors.at(i, k) * scale[k] * e.vectors.at(j, k);
      w.at(i, j) = w.at(j, i) = s;
    }
  return w;
}

Tensor second_moment(const Tensor& features) {
  const std::size_t n = features.rows(), f = features.cols();
  Tensor s({f, f});
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = features.row(r);
    for (std::size_t i = 0; i < f; ++i)
      for (std::size_t j = i; j < f; ++j) s.at(i, j) += x[i] * x[j];
  }
  for (std::size_t i = 0; i < f; ++i)
    for (std::size_t j = i; j < f; ++j) s.at(j, i) = s.at(i, j) = s.at(i, j) / static_cast<double>(n);
  return s;
}

}  // namespace hanslens
