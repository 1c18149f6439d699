//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_PARAMETERS_H_
#define SMITED_PARAMETERS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smited/tensor.h"

namespace smited {

struct Parameter {
  std::string name;
  Tensor value;
  // Frozen parameters (e.g. random feature projections) never receive
  // optimizer updates but are still saved in checkpoints.
  bool trainable = true;
};

// Ordered, name-addressable collection of parameters. Ids are positions in
// insertion order and stay valid for the lifetime of the set.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value, bool trainable = true);

  std::size_t size() const noexcept { return items_.size(); }
  Parameter &operator[](std::size_t id) { return items_[id]; }
  const Parameter &operator[](std::size_t id) const { return items_[id]; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t id_of(std::string_view name) const;

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> items_;
};

// Per-parameter gradient accumulators aligned with a ParameterSet. Entries
// stay empty until a gradient arrives.
class Gradients {
 public:
  explicit Gradients(std::size_t count = 0) : grads_(count) { }

  std::size_t size() const noexcept { return grads_.size(); }
  Tensor &operator[](std::size_t id) { return grads_[id]; }
  const Tensor &operator[](std::size_t id) const { return grads_[id]; }

  void accumulate(std::size_t id, const Tensor &grad);
  // Adds every entry of `other` in place; used to reduce per-item
  // gradients in a fixed order.
  void accumulate(const Gradients &other);
  void scale(double factor);
  void clear();

 private:
  std::vector<Tensor> grads_;
};

}  // namespace smited

#endif  // SMITED_PARAMETERS_H_
