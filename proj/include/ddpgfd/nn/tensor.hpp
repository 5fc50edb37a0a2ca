#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ddpgfd::nn {

// Dense row-major array of doubles. Rank 1 is a vector, rank 2 a matrix
// (rows = batch or output units). Storage is aligned for Eigen's vector
// width, so the rounding of mapped products does not depend on the address.
class Tensor {
 public:
  using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, const std::vector<double>& data);

  static Tensor vector(const std::vector<double>& values);
  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  // Rows/cols view a rank-1 tensor as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const Storage& storage() const { return data_; }
  // Reinterprets the data under a shape with the same element count.
  void reshape(std::vector<std::size_t> shape);

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  void fill(double value);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  Storage data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace ddpgfd::nn
