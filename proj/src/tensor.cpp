#include "bdrl/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace bdrl {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  std::size_t expected = 1;
  for (std::size_t d : shape_) expected *= d;
  if (expected != data_.size()) {
    throw std::invalid_argument("Tensor: shape does not match data size");
  }
}

Tensor Tensor::vector(std::size_t n) {
  return Tensor({n}, std::vector<double>(n, 0.0));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, 0.0));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (is_matrix()) return shape_[0];
  if (is_vector()) return 1;
  throw std::logic_error("Tensor::rows: rank must be 1 or 2");
}

std::size_t Tensor::cols() const {
  if (is_matrix()) return shape_[1];
  if (is_vector()) return shape_[0];
  throw std::logic_error("Tensor::cols: rank must be 1 or 2");
}

double& Tensor::at(std::size_t i) {
  if (i >= data_.size()) throw std::invalid_argument("Tensor::at: index out of range");
  return data_[i];
}

double Tensor::at(std::size_t i) const {
  if (i >= data_.size()) throw std::invalid_argument("Tensor::at: index out of range");
  return data_[i];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  if (!is_matrix() || r >= shape_[0] || c >= shape_[1]) {
    throw std::invalid_argument("Tensor::at(r,c): index out of range");
  }
  return data_[r * shape_[1] + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (!is_matrix() || r >= shape_[0] || c >= shape_[1]) {
    throw std::invalid_argument("Tensor::at(r,c): index out of range");
  }
  return data_[r * shape_[1] + c];
}

std::span<double> Tensor::row(std::size_t r) {
  if (r >= rows()) throw std::invalid_argument("Tensor::row: index out of range");
  const std::size_t c = cols();
  return {data_.data() + r * c, c};
}

std::span<const double> Tensor::row(std::size_t r) const {
  if (r >= rows()) throw std::invalid_argument("Tensor::row: index out of range");
  const std::size_t c = cols();
  return {data_.data() + r * c, c};
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace bdrl
