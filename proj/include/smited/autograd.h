//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_AUTOGRAD_H_
#define SMITED_AUTOGRAD_H_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include "smited/parameters.h"
#include "smited/rng.h"
#include "smited/tensor.h"

namespace smited {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape *tape, std::size_t id) : tape_(tape), id_(id) { }

  Tape &tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor &value() const;
  const Shape &shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Tape *tape_ = nullptr;
  std::size_t id_ = 0;
};

// Linear record of operations. `backward` walks the record in exact reverse
// order, calling each node's pullback with its accumulated output gradient.
class Tape {
 public:
  // Pullback: receives the gradient w.r.t. the node output and pushes
  // contributions into its inputs via Tape::accumulate.
  using Pullback = std::function<void(Tape &, const Tensor &)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Leaf bound to a parameter; its gradient lands in Gradients[id] after
  // collect(). Frozen parameters, or `track == false`, record a constant.
  Var parameter(const ParameterSet &params, std::size_t id, bool track = true);

  // Records an op output. The pullback is dropped when no input needs a
  // gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Pullback pullback);
  Var record(Tensor value, std::span<const Var> inputs, Pullback pullback);

  const Tensor &value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Adds `grad` into the gradient of `v` when it is tracked.
  void accumulate(const Var &v, const Tensor &grad);
  // Mutable gradient buffer for `v`, zero-initialized on first use. Only
  // call for vars that require a gradient.
  Tensor &grad_buffer(const Var &v);

  // Seeds d(root)/d(root) = 1 for a single-element root and back-propagates.
  void backward(const Var &root);
  // Gradient of a var after backward(); zeros if none reached it.
  Tensor grad(const Var &v) const;
  // Moves every parameter-leaf gradient into `out`.
  void collect(Gradients &out) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::optional<std::size_t> parameter_id;
    Pullback pullback;
  };

  std::vector<Node> nodes_;
};

// Differentiable ops. Matrices are rank-2 tensors; "rows" ops treat a
// rank-2 tensor as a stack of row vectors.
namespace ad {

Var matmul(const Var &a, const Var &b);
// a @ b^T without materializing the transpose.
Var matmul_nt(const Var &a, const Var &b);
Var add(const Var &a, const Var &b);
Var sub(const Var &a, const Var &b);
Var mul(const Var &a, const Var &b);
Var scale(const Var &a, double factor);
// x [n, m] + bias [m] (or [1, m]) broadcast over rows.
Var add_bias(const Var &x, const Var &bias);
// x [n, m] / d [n, 1] broadcast over columns.
Var div_rows(const Var &x, const Var &d);
Var clamp_min(const Var &a, double lo);
Var exp(const Var &a);
Var transpose(const Var &a);
Var reshape(const Var &a, Shape shape);
// Concatenation of rank-2 tensors along axis 0 (rows) or 1 (cols).
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice_rows(const Var &a, std::size_t begin, std::size_t end);
Var slice_cols(const Var &a, std::size_t begin, std::size_t end);
Var sum(const Var &a);
Var mean(const Var &a);
// Column sums: [n, m] -> [1, m].
Var sum_rows(const Var &a);
// Weighted mean of rows: sum_i w_i x_i / sum_i w_i -> [1, m]. Weights are
// constants; zero total weight yields zeros.
Var weighted_mean_rows(const Var &x, std::span<const double> weights);
Var embedding(const Var &table, std::span<const int> ids);
// Softmax over the last axis.
Var softmax(const Var &a);
// tanh-approximated GELU.
Var gelu(const Var &a);
// Normalizes over the last axis, then scales by gamma and shifts by beta.
Var layernorm(const Var &x, const Var &gamma, const Var &beta,
              double eps = 1e-5);
// Weighted mean cross-entropy over rows of logits [n, V]:
// sum_i w_i * CE(logits_i, target_i) / sum_i w_i. Rows with w_i == 0 are
// skipped; all-zero weights give a zero loss with zero gradient.
Var cross_entropy(const Var &logits, std::span<const int> targets,
                  std::span<const double> weights);
Var cross_entropy(const Var &logits, std::span<const int> targets);
Var mse(const Var &a, const Var &b);
// Inverted dropout; identity when p == 0.
Var dropout(const Var &a, double p, Rng &rng);

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kGeluCoeff = 0.044715;

}  // namespace ad

// Plain-tensor forward helpers shared with tests and inference paths.
Tensor softmax_rows(const Tensor &logits);
double gelu_value(double x);

}  // namespace smited

#endif  // SMITED_AUTOGRAD_H_
