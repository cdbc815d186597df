#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bdrl {

// Dense row-major tensor of doubles.  Only ranks 1 and 2 are used in this
// codebase (vectors and matrices); the shape is kept as an explicit vector
// so callers can always recover dimensionality.
//
// Invariant: data().size() == product(shape()).
class Tensor {
 public:
  Tensor() = default;

  // Zero-filled vector of length n.
  static Tensor vector(std::size_t n);

  // Vector adopting the given values.
  static Tensor vector(std::vector<double> values);

  // Zero-filled rows x cols matrix.
  static Tensor matrix(std::size_t rows, std::size_t cols);

  // Matrix adopting the given row-major values.  Requires
  // values.size() == rows * cols.
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool is_vector() const { return rank() == 1; }
  bool is_matrix() const { return rank() == 2; }

  // Matrix extents.  A vector is treated as a single row where a batch
  // view is needed.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Bounds-checked element access; at(r, c) requires a matrix.
  double& at(std::size_t i);
  double at(std::size_t i) const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Row r of a matrix (or the whole vector for r == 0).
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);

  // True when every entry is finite (no NaN or infinity).
  bool all_finite() const;

 private:
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace bdrl
