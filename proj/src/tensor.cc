//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/tensor.h"

#include <functional>
#include <numeric>
#include <sstream>

#include "smited/error.h"
#include "smited/linalg.h"

namespace smited {

std::size_t shape_size(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void throw_shape_mismatch(const char *op, const Shape &a, const Shape &b) {
  throw NumericalError("ShapeMismatch", std::string(op) + ": shapes " +
                                            shape_string(a) + " and " +
                                            shape_string(b));
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) { }

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw_shape_mismatch("Tensor", shape_, {data_.size()});
  }
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : data_.size() / shape_.back();
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw_shape_mismatch("reshape", shape_, shape);
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::add_inplace(const Tensor &other) {
  if (other.shape_ != shape_) throw_shape_mismatch("add", shape_, other.shape_);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

Tensor matmul(const Tensor &a, const Tensor &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw_shape_mismatch("matmul", a.shape(), b.shape());
  }
  Tensor out({a.dim(0), b.dim(1)});
  linalg::gemm(a, false, b, false, out, false);
  return out;
}

Tensor transpose(const Tensor &a) {
  if (a.rank() != 2) throw_shape_mismatch("transpose", a.shape(), {2});
  const std::size_t n = a.dim(0), m = a.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = a[i * m + j];
  }
  return out;
}

}  // namespace smited
