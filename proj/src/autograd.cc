//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/autograd.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "smited/error.h"
#include "smited/linalg.h"

namespace smited {

const Tensor &Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), {}, false, std::nullopt, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back({std::move(value), {}, true, std::nullopt, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const ParameterSet &params, std::size_t id, bool track) {
  const Parameter &p = params[id];
  const bool tracked = track && p.trainable;
  nodes_.push_back({p.value, {}, tracked,
                    tracked ? std::optional<std::size_t>(id) : std::nullopt,
                    nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs,
                 Pullback pullback) {
  return record(std::move(value),
                std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(pullback));
}

Var Tape::record(Tensor value, std::span<const Var> inputs,
                 Pullback pullback) {
  bool needs = false;
  for (const Var &v : inputs) needs = needs || requires_grad(v.id());
  nodes_.push_back({std::move(value), {}, needs, std::nullopt,
                    needs ? std::move(pullback) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var &v, const Tensor &grad) {
  Node &node = nodes_[v.id()];
  if (!node.requires_grad) return;
  if (node.grad.empty()) {
    if (grad.shape() != node.value.shape()) {
      throw_shape_mismatch("accumulate", node.value.shape(), grad.shape());
    }
    node.grad = grad;
  } else {
    node.grad.add_inplace(grad);
  }
}

Tensor &Tape::grad_buffer(const Var &v) {
  Node &node = nodes_[v.id()];
  if (node.grad.empty()) node.grad = Tensor(node.value.shape());
  return node.grad;
}

void Tape::backward(const Var &root) {
  if (root.value().size() != 1) {
    throw NumericalError("ShapeMismatch",
                         "backward root must hold one element, got " +
                             shape_string(root.shape()));
  }
  if (!nodes_[root.id()].requires_grad) return;
  nodes_[root.id()].grad = Tensor(root.shape(), 1.0);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node &node = nodes_[i];
    if (!node.pullback || node.grad.empty()) continue;
    node.pullback(*this, node.grad);
  }
}

Tensor Tape::grad(const Var &v) const {
  const Node &node = nodes_[v.id()];
  if (node.grad.empty()) return Tensor(node.value.shape());
  return node.grad;
}

void Tape::collect(Gradients &out) const {
  for (const Node &node : nodes_) {
    if (node.parameter_id && !node.grad.empty()) {
      out.accumulate(*node.parameter_id, node.grad);
    }
  }
}

Tensor softmax_rows(const Tensor &logits) {
  Tensor out(logits.shape());
  const std::size_t n = logits.rows(), m = logits.cols();
  for (std::size_t r = 0; r < n; ++r) {
    auto in = logits.row_span(r);
    auto o = out.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (std::size_t j = 0; j < m; ++j) o[j] /= total;
  }
  return out;
}

double gelu_value(double x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + ad::kGeluCoeff * x * x * x)));
}

namespace ad {
namespace {

void require_same(const char *op, const Var &a, const Var &b) {
  if (a.shape() != b.shape()) throw_shape_mismatch(op, a.shape(), b.shape());
}

void require_matrix(const char *op, const Var &a) {
  if (a.value().rank() != 2) throw_shape_mismatch(op, a.shape(), {0, 0});
}

}  // namespace

Var matmul(const Var &a, const Var &b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.shape()[1] != b.shape()[0]) {
    throw_shape_mismatch("matmul", a.shape(), b.shape());
  }
  Tensor out = smited::matmul(a.value(), b.value());
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape &t, const Tensor &g) {
                           if (a.requires_grad()) {
                             linalg::gemm(g, false, b.value(), true,
                                          t.grad_buffer(a), true);
                           }
                           if (b.requires_grad()) {
                             linalg::gemm(a.value(), true, g, false,
                                          t.grad_buffer(b), true);
                           }
                         });
}

Var matmul_nt(const Var &a, const Var &b) {
  require_matrix("matmul_nt", a);
  require_matrix("matmul_nt", b);
  if (a.shape()[1] != b.shape()[1]) {
    throw_shape_mismatch("matmul_nt", a.shape(), b.shape());
  }
  Tensor out({a.shape()[0], b.shape()[0]});
  linalg::gemm(a.value(), false, b.value(), true, out, false);
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape &t, const Tensor &g) {
                           if (a.requires_grad()) {
                             linalg::gemm(g, false, b.value(), false,
                                          t.grad_buffer(a), true);
                           }
                           if (b.requires_grad()) {
                             linalg::gemm(g, true, a.value(), false,
                                          t.grad_buffer(b), true);
                           }
                         });
}

Var add(const Var &a, const Var &b) {
  require_same("add", a, b);
  Tensor out = a.value();
  out.add_inplace(b.value());
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape &t, const Tensor &g) {
                           t.accumulate(a, g);
                           t.accumulate(b, g);
                         });
}

Var sub(const Var &a, const Var &b) {
  require_same("sub", a, b);
  Tensor out = a.value();
  const auto &bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape &t, const Tensor &g) {
                           t.accumulate(a, g);
                           if (b.requires_grad()) {
                             Tensor &gb = t.grad_buffer(b);
                             for (std::size_t i = 0; i < g.size(); ++i) {
                               gb[i] -= g[i];
                             }
                           }
                         });
}

Var mul(const Var &a, const Var &b) {
  require_same("mul", a, b);
  Tensor out = a.value();
  const auto &bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape &t, const Tensor &g) {
                           if (a.requires_grad()) {
                             Tensor &ga = t.grad_buffer(a);
                             const auto &bv = b.value();
                             for (std::size_t i = 0; i < g.size(); ++i) {
                               ga[i] += g[i] * bv[i];
                             }
                           }
                           if (b.requires_grad()) {
                             Tensor &gb = t.grad_buffer(b);
                             const auto &av = a.value();
                             for (std::size_t i = 0; i < g.size(); ++i) {
                               gb[i] += g[i] * av[i];
                             }
                           }
                         });
}

Var scale(const Var &a, double factor) {
  Tensor out = a.value();
  for (double &v : out.storage()) v *= factor;
  return a.tape().record(std::move(out), {a},
                         [a, factor](Tape &t, const Tensor &g) {
                           Tensor &ga = t.grad_buffer(a);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             ga[i] += factor * g[i];
                           }
                         });
}

Var add_bias(const Var &x, const Var &bias) {
  require_matrix("add_bias", x);
  const std::size_t n = x.shape()[0], m = x.shape()[1];
  if (bias.value().size() != m) {
    throw_shape_mismatch("add_bias", x.shape(), bias.shape());
  }
  Tensor out = x.value();
  const auto &bv = bias.value();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < m; ++j) out[r * m + j] += bv[j];
  }
  return x.tape().record(std::move(out), {x, bias},
                         [x, bias, n, m](Tape &t, const Tensor &g) {
                           t.accumulate(x, g);
                           if (bias.requires_grad()) {
                             Tensor &gb = t.grad_buffer(bias);
                             for (std::size_t r = 0; r < n; ++r) {
                               for (std::size_t j = 0; j < m; ++j) {
                                 gb[j] += g[r * m + j];
                               }
                             }
                           }
                         });
}

Var div_rows(const Var &x, const Var &d) {
  require_matrix("div_rows", x);
  const std::size_t n = x.shape()[0], m = x.shape()[1];
  if (d.value().size() != n) throw_shape_mismatch("div_rows", x.shape(), d.shape());
  Tensor out = x.value();
  const auto &dv = d.value();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < m; ++j) out[r * m + j] /= dv[r];
  }
  return x.tape().record(
      std::move(out), {x, d}, [x, d, n, m](Tape &t, const Tensor &g) {
        const auto &dv = d.value();
        if (x.requires_grad()) {
          Tensor &gx = t.grad_buffer(x);
          for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < m; ++j) {
              gx[r * m + j] += g[r * m + j] / dv[r];
            }
          }
        }
        if (d.requires_grad()) {
          Tensor &gd = t.grad_buffer(d);
          const auto &xv = x.value();
          for (std::size_t r = 0; r < n; ++r) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
              acc += g[r * m + j] * xv[r * m + j];
            }
            gd[r] -= acc / (dv[r] * dv[r]);
          }
        }
      });
}

Var clamp_min(const Var &a, double lo) {
  Tensor out = a.value();
  for (double &v : out.storage()) v = std::max(v, lo);
  return a.tape().record(std::move(out), {a}, [a, lo](Tape &t, const Tensor &g) {
    Tensor &ga = t.grad_buffer(a);
    const auto &av = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > lo) ga[i] += g[i];
    }
  });
}

Var exp(const Var &a) {
  Tensor out = a.value();
  for (double &v : out.storage()) v = std::exp(v);
  Tape &tape = a.tape();
  const std::size_t out_id = tape.size();
  return tape.record(std::move(out), {a},
                     [a, out_id](Tape &t, const Tensor &g) {
                       Tensor &ga = t.grad_buffer(a);
                       const auto &y = t.value(out_id);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         ga[i] += g[i] * y[i];
                       }
                     });
}

Var transpose(const Var &a) {
  require_matrix("transpose", a);
  return a.tape().record(smited::transpose(a.value()), {a},
                         [a](Tape &t, const Tensor &g) {
                           t.accumulate(a, smited::transpose(g));
                         });
}

Var reshape(const Var &a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape().record(std::move(out), {a}, [a](Tape &t, const Tensor &g) {
    t.accumulate(a, g.reshaped(a.shape()));
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw_shape_mismatch("concat", {}, {});
  if (axis > 1) throw_shape_mismatch("concat", parts[0].shape(), {axis});
  for (const Var &p : parts) require_matrix("concat", p);
  const std::size_t other = axis == 0 ? 1 : 0;
  std::size_t total = 0;
  for (const Var &p : parts) {
    if (p.shape()[other] != parts[0].shape()[other]) {
      throw_shape_mismatch("concat", parts[0].shape(), p.shape());
    }
    total += p.shape()[axis];
  }
  Shape shape = parts[0].shape();
  shape[axis] = total;
  Tensor out(shape);
  const std::size_t cols = shape[1];
  std::size_t offset = 0;
  for (const Var &p : parts) {
    const auto &v = p.value();
    const std::size_t pr = v.dim(0), pc = v.dim(1);
    for (std::size_t r = 0; r < pr; ++r) {
      for (std::size_t c = 0; c < pc; ++c) {
        const std::size_t rr = axis == 0 ? r + offset : r;
        const std::size_t cc = axis == 1 ? c + offset : c;
        out[rr * cols + cc] = v[r * pc + c];
      }
    }
    offset += v.dim(axis);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape::Pullback pullback = [inputs, axis, cols](Tape &t, const Tensor &g) {
    std::size_t off = 0;
    for (const Var &p : inputs) {
      const std::size_t pr = p.shape()[0], pc = p.shape()[1];
      if (p.requires_grad()) {
        Tensor &gp = t.grad_buffer(p);
        for (std::size_t r = 0; r < pr; ++r) {
          for (std::size_t c = 0; c < pc; ++c) {
            const std::size_t rr = axis == 0 ? r + off : r;
            const std::size_t cc = axis == 1 ? c + off : c;
            gp[r * pc + c] += g[rr * cols + cc];
          }
        }
      }
      off += p.shape()[axis];
    }
  };
  return parts[0].tape().record(std::move(out), parts, std::move(pullback));
}

Var slice_rows(const Var &a, std::size_t begin, std::size_t end) {
  require_matrix("slice_rows", a);
  const std::size_t m = a.shape()[1];
  if (begin > end || end > a.shape()[0]) {
    throw_shape_mismatch("slice_rows", a.shape(), {begin, end});
  }
  const auto &v = a.value();
  Tensor out({end - begin, m},
             std::vector<double>(v.storage().begin() + begin * m,
                                 v.storage().begin() + end * m));
  return a.tape().record(std::move(out), {a},
                         [a, begin, m](Tape &t, const Tensor &g) {
                           Tensor &ga = t.grad_buffer(a);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             ga[begin * m + i] += g[i];
                           }
                         });
}

Var slice_cols(const Var &a, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", a);
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (begin > end || end > m) {
    throw_shape_mismatch("slice_cols", a.shape(), {begin, end});
  }
  const std::size_t w = end - begin;
  Tensor out({n, w});
  const auto &v = a.value();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = v[r * m + begin + c];
  }
  return a.tape().record(std::move(out), {a},
                         [a, begin, n, m, w](Tape &t, const Tensor &g) {
                           Tensor &ga = t.grad_buffer(a);
                           for (std::size_t r = 0; r < n; ++r) {
                             for (std::size_t c = 0; c < w; ++c) {
                               ga[r * m + begin + c] += g[r * w + c];
                             }
                           }
                         });
}

Var sum(const Var &a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape().record(Tensor::scalar(total), {a},
                         [a](Tape &t, const Tensor &g) {
                           Tensor &ga = t.grad_buffer(a);
                           for (double &v : ga.storage()) v += g[0];
                         });
}

Var mean(const Var &a) {
  const double n = static_cast<double>(a.value().size());
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape().record(Tensor::scalar(total / n), {a},
                         [a, n](Tape &t, const Tensor &g) {
                           Tensor &ga = t.grad_buffer(a);
                           for (double &v : ga.storage()) v += g[0] / n;
                         });
}

Var sum_rows(const Var &a) {
  require_matrix("sum_rows", a);
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  Tensor out({1, m});
  const auto &v = a.value();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < m; ++j) out[j] += v[r * m + j];
  }
  return a.tape().record(std::move(out), {a},
                         [a, n, m](Tape &t, const Tensor &g) {
                           Tensor &ga = t.grad_buffer(a);
                           for (std::size_t r = 0; r < n; ++r) {
                             for (std::size_t j = 0; j < m; ++j) {
                               ga[r * m + j] += g[j];
                             }
                           }
                         });
}

Var weighted_mean_rows(const Var &x, std::span<const double> weights) {
  require_matrix("weighted_mean_rows", x);
  const std::size_t n = x.shape()[0], m = x.shape()[1];
  if (weights.size() != n) {
    throw_shape_mismatch("weighted_mean_rows", x.shape(), {weights.size()});
  }
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> coef(n, 0.0);
  if (total != 0.0) {
    for (std::size_t r = 0; r < n; ++r) coef[r] = weights[r] / total;
  }
  Tensor out({1, m});
  const auto &v = x.value();
  for (std::size_t r = 0; r < n; ++r) {
    if (coef[r] == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) out[j] += coef[r] * v[r * m + j];
  }
  return x.tape().record(std::move(out), {x},
                         [x, coef, n, m](Tape &t, const Tensor &g) {
                           Tensor &gx = t.grad_buffer(x);
                           for (std::size_t r = 0; r < n; ++r) {
                             if (coef[r] == 0.0) continue;
                             for (std::size_t j = 0; j < m; ++j) {
                               gx[r * m + j] += coef[r] * g[j];
                             }
                           }
                         });
}

Var embedding(const Var &table, std::span<const int> ids) {
  require_matrix("embedding", table);
  const std::size_t vocab = table.shape()[0], m = table.shape()[1];
  std::vector<int> rows(ids.begin(), ids.end());
  Tensor out({rows.size(), m});
  const auto &v = table.value();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= vocab) {
      throw DataError("UnknownId", "embedding id " + std::to_string(rows[i]) +
                                       " outside vocabulary of " +
                                       std::to_string(vocab));
    }
    std::copy_n(v.storage().begin() + rows[i] * m, m,
                out.storage().begin() + i * m);
  }
  return table.tape().record(std::move(out), {table},
                             [table, rows, m](Tape &t, const Tensor &g) {
                               Tensor &gt = t.grad_buffer(table);
                               for (std::size_t i = 0; i < rows.size(); ++i) {
                                 for (std::size_t j = 0; j < m; ++j) {
                                   gt[rows[i] * m + j] += g[i * m + j];
                                 }
                               }
                             });
}

Var softmax(const Var &a) {
  Tape &tape = a.tape();
  const std::size_t out_id = tape.size();
  return tape.record(softmax_rows(a.value()), {a},
                     [a, out_id](Tape &t, const Tensor &g) {
                       const Tensor &y = t.value(out_id);
                       Tensor &ga = t.grad_buffer(a);
                       const std::size_t n = y.rows(), m = y.cols();
                       for (std::size_t r = 0; r < n; ++r) {
                         double dot = 0.0;
                         for (std::size_t j = 0; j < m; ++j) {
                           dot += g[r * m + j] * y[r * m + j];
                         }
                         for (std::size_t j = 0; j < m; ++j) {
                           ga[r * m + j] += y[r * m + j] * (g[r * m + j] - dot);
                         }
                       }
                     });
}

Var gelu(const Var &a) {
  Tensor out = a.value();
  for (double &v : out.storage()) v = gelu_value(v);
  return a.tape().record(std::move(out), {a}, [a](Tape &t, const Tensor &g) {
    constexpr double k = 0.7978845608028654;
    Tensor &ga = t.grad_buffer(a);
    const auto &x = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double xi = x[i];
      const double th = std::tanh(k * (xi + kGeluCoeff * xi * xi * xi));
      const double d = 0.5 * (1.0 + th) +
                       0.5 * xi * (1.0 - th * th) * k *
                           (1.0 + 3.0 * kGeluCoeff * xi * xi);
      ga[i] += g[i] * d;
    }
  });
}

Var layernorm(const Var &x, const Var &gamma, const Var &beta, double eps) {
  const std::size_t n = x.value().rows(), m = x.value().cols();
  if (gamma.value().size() != m || beta.value().size() != m) {
    throw_shape_mismatch("layernorm", x.shape(), gamma.shape());
  }
  Tensor out(x.shape());
  std::vector<double> xhat(n * m), rstd(n);
  const auto &xv = x.value();
  const auto &gv = gamma.value();
  const auto &bv = beta.value();
  for (std::size_t r = 0; r < n; ++r) {
    double mu = 0.0;
    for (std::size_t j = 0; j < m; ++j) mu += xv[r * m + j];
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = xv[r * m + j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(m);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) {
      xhat[r * m + j] = (xv[r * m + j] - mu) * rstd[r];
      out[r * m + j] = gv[j] * xhat[r * m + j] + bv[j];
    }
  }
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), rstd = std::move(rstd), n,
       m](Tape &t, const Tensor &g) {
        const auto &gv = gamma.value();
        if (gamma.requires_grad()) {
          Tensor &gg = t.grad_buffer(gamma);
          for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < m; ++j) {
              gg[j] += g[r * m + j] * xhat[r * m + j];
            }
          }
        }
        if (beta.requires_grad()) {
          Tensor &gb = t.grad_buffer(beta);
          for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < m; ++j) gb[j] += g[r * m + j];
          }
        }
        if (x.requires_grad()) {
          Tensor &gx = t.grad_buffer(x);
          const double inv_m = 1.0 / static_cast<double>(m);
          for (std::size_t r = 0; r < n; ++r) {
            double mean_g = 0.0, mean_gx = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
              const double gh = g[r * m + j] * gv[j];
              mean_g += gh;
              mean_gx += gh * xhat[r * m + j];
            }
            mean_g *= inv_m;
            mean_gx *= inv_m;
            for (std::size_t j = 0; j < m; ++j) {
              const double gh = g[r * m + j] * gv[j];
              gx[r * m + j] +=
                  rstd[r] * (gh - mean_g - xhat[r * m + j] * mean_gx);
            }
          }
        }
      });
}

Var cross_entropy(const Var &logits, std::span<const int> targets,
                  std::span<const double> weights) {
  require_matrix("cross_entropy", logits);
  const std::size_t n = logits.shape()[0], vocab = logits.shape()[1];
  if (targets.size() != n || weights.size() != n) {
    throw_shape_mismatch("cross_entropy", logits.shape(),
                         {targets.size(), weights.size()});
  }
  double total_w = 0.0;
  for (double w : weights) total_w += w;
  Tensor probs = softmax_rows(logits.value());
  double loss = 0.0;
  std::vector<double> coef(n, 0.0);
  if (total_w > 0.0) {
    const auto &lv = logits.value();
    for (std::size_t r = 0; r < n; ++r) {
      if (weights[r] == 0.0) continue;
      const int tgt = targets[r];
      if (tgt < 0 || static_cast<std::size_t>(tgt) >= vocab) {
        throw DataError("UnknownId",
                        "target id " + std::to_string(tgt) + " outside vocab");
      }
      auto row = lv.row_span(r);
      const double mx = *std::max_element(row.begin(), row.end());
      double s = 0.0;
      for (double z : row) s += std::exp(z - mx);
      loss += weights[r] * (std::log(s) + mx - row[tgt]);
      coef[r] = weights[r] / total_w;
    }
    loss /= total_w;
  }
  std::vector<int> tgts(targets.begin(), targets.end());
  return logits.tape().record(
      Tensor::scalar(loss), {logits},
      [logits, probs = std::move(probs), coef = std::move(coef),
       tgts = std::move(tgts), n, vocab](Tape &t, const Tensor &g) {
        Tensor &gl = t.grad_buffer(logits);
        for (std::size_t r = 0; r < n; ++r) {
          if (coef[r] == 0.0) continue;
          const double c = coef[r] * g[0];
          for (std::size_t j = 0; j < vocab; ++j) {
            gl[r * vocab + j] += c * probs[r * vocab + j];
          }
          gl[r * vocab + tgts[r]] -= c;
        }
      });
}

Var cross_entropy(const Var &logits, std::span<const int> targets) {
  std::vector<double> weights(targets.size(), 1.0);
  return cross_entropy(logits, targets, weights);
}

Var mse(const Var &a, const Var &b) {
  require_same("mse", a, b);
  const auto &av = a.value();
  const auto &bv = b.value();
  const double n = static_cast<double>(av.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    loss += d * d;
  }
  return a.tape().record(Tensor::scalar(loss / n), {a, b},
                         [a, b, n](Tape &t, const Tensor &g) {
                           const auto &av = a.value();
                           const auto &bv = b.value();
                           const double c = 2.0 * g[0] / n;
                           if (a.requires_grad()) {
                             Tensor &ga = t.grad_buffer(a);
                             for (std::size_t i = 0; i < av.size(); ++i) {
                               ga[i] += c * (av[i] - bv[i]);
                             }
                           }
                           if (b.requires_grad()) {
                             Tensor &gb = t.grad_buffer(b);
                             for (std::size_t i = 0; i < av.size(); ++i) {
                               gb[i] -= c * (av[i] - bv[i]);
                             }
                           }
                         });
}

Var dropout(const Var &a, double p, Rng &rng) {
  if (p <= 0.0) return a;
  Tensor mask(a.shape());
  const double keep = 1.0 - p;
  for (double &m : mask.storage()) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  return mul(a, a.tape().constant(std::move(mask)));
}

}  // namespace ad
}  // namespace smited
