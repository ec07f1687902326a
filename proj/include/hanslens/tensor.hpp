#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hanslens {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array of doubles.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  // 1-D tensor from a list of values.
  static Tensor vector(std::vector<double> values);
  static Tensor vector(std::initializer_list<double> values);
  // 2-D tensor from nested rows; all rows must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  // Rank-2 element access.
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  std::size_t rows() const;
  std::size_t cols() const;
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  // Same values, new shape of equal size.
  Tensor reshaped(Shape shape) const;
  Tensor flattened() const { return reshaped({size()}); }

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

private:
  Shape shape_;
  std::vector<double> values_;
};

double sum(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace hanslens
