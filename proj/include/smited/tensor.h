//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_TENSOR_H_
#define SMITED_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace smited {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape &shape);
std::string shape_string(const Shape &shape);

// Throws ShapeMismatch naming both shapes.
[[noreturn]] void throw_shape_mismatch(const char *op, const Shape &a,
                                       const Shape &b);

// Dense row-major array of doubles. Plain value type: copying copies data.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  static Tensor row(std::vector<double> values);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Rows/cols of the tensor viewed as a matrix over its last axis.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double> &storage() noexcept { return data_; }
  const std::vector<double> &storage() const noexcept { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double &at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<double> row_span(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols(), cols());
  }
  std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

  Tensor reshaped(Shape shape) const;
  void fill(double value);
  void add_inplace(const Tensor &other);

  bool operator==(const Tensor &other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Out-of-place helpers on plain tensors (no tape).
Tensor matmul(const Tensor &a, const Tensor &b);
Tensor transpose(const Tensor &a);

}  // namespace smited

#endif  // SMITED_TENSOR_H_
