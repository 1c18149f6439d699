//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smited/rng.h"

namespace smited {
namespace {

void record_error(GradCheckResult &result, double analytic, double numeric) {
  const double abs_err = std::abs(analytic - numeric);
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
  result.max_relative_error = std::max(result.max_relative_error,
                                       abs_err / denom);
  ++result.coordinates_checked;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var(Tape &, const Var &)> &f,
                           const Tensor &x, double eps) {
  Tensor analytic;
  {
    Tape tape;
    Var xv = tape.variable(x);
    Var y = f(tape, xv);
    tape.backward(y);
    analytic = tape.grad(xv);
  }
  auto eval = [&](const Tensor &point) {
    Tape tape;
    Var xv = tape.constant(point);
    return f(tape, xv).value()[0];
  };
  GradCheckResult result;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = eval(probe);
    probe[i] = x[i] - eps;
    const double down = eval(probe);
    probe[i] = x[i];
    record_error(result, analytic[i], (up - down) / (2.0 * eps));
  }
  return result;
}

GradCheckResult grad_check_parameters(ParameterSet &params,
                                      const std::function<Var(Tape &)> &loss,
                                      double eps, std::size_t max_per_parameter,
                                      std::uint64_t seed) {
  Gradients analytic(params.size());
  {
    Tape tape;
    Var y = loss(tape);
    tape.backward(y);
    tape.collect(analytic);
  }
  auto eval = [&] {
    Tape tape;
    return loss(tape).value()[0];
  };
  Rng rng(seed);
  GradCheckResult result;
  for (std::size_t id = 0; id < params.size(); ++id) {
    Parameter &p = params[id];
    if (!p.trainable) continue;
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_per_parameter && coords.size() > max_per_parameter) {
      for (std::size_t i = 0; i < max_per_parameter; ++i) {
        std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
      }
      coords.resize(max_per_parameter);
    }
    for (std::size_t c : coords) {
      const double saved = p.value[c];
      p.value[c] = saved + eps;
      const double up = eval();
      p.value[c] = saved - eps;
      const double down = eval();
      p.value[c] = saved;
      const double a = analytic[id].empty() ? 0.0 : analytic[id][c];
      record_error(result, a, (up - down) / (2.0 * eps));
    }
  }
  return result;
}

}  // namespace smited
