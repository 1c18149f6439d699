//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/parameters.h"

#include "smited/error.h"

namespace smited {

std::size_t ParameterSet::add(std::string name, Tensor value, bool trainable) {
  if (find(name)) {
    throw DataError("DuplicateParameter", "parameter '" + name + "' exists");
  }
  items_.push_back({std::move(name), std::move(value), trainable});
  return items_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterSet::id_of(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw DataError("UnknownParameter",
                  "no parameter named '" + std::string(name) + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto &p : items_) n += p.value.size();
  return n;
}

void Gradients::accumulate(std::size_t id, const Tensor &grad) {
  Tensor &slot = grads_.at(id);
  if (slot.empty()) {
    slot = grad;
  } else {
    slot.add_inplace(grad);
  }
}

void Gradients::accumulate(const Gradients &other) {
  if (other.size() != size()) {
    throw_shape_mismatch("Gradients::accumulate", {size()}, {other.size()});
  }
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (!other.grads_[i].empty()) accumulate(i, other.grads_[i]);
  }
}

void Gradients::scale(double factor) {
  for (auto &g : grads_) {
    for (double &v : g.storage()) v *= factor;
  }
}

void Gradients::clear() {
  for (auto &g : grads_) g = Tensor();
}

}  // namespace smited
