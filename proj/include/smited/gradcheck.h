//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_GRADCHECK_H_
#define SMITED_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>

#include "smited/autograd.h"

namespace smited {

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t coordinates_checked = 0;
};

// Relative error of one coordinate: |analytic - numeric| divided by
// max(|analytic|, |numeric|, floor). The floor keeps exactly-zero
// gradients from turning rounding noise into huge ratios.
inline constexpr double kGradCheckFloor = 1e-4;

// Compares the tape gradient of scalar f at x with central differences
// (f(x+eps) - f(x-eps)) / 2eps, coordinate by coordinate.
GradCheckResult grad_check(const std::function<Var(Tape &, const Var &)> &f,
                           const Tensor &x, double eps = 1e-5);

// Same comparison over the trainable entries of a parameter set. `loss`
// builds the scalar on a fresh tape using tape.parameter(params, id). When
// `max_per_parameter` is nonzero, only that many seeded-random coordinates
// of each parameter are perturbed.
GradCheckResult grad_check_parameters(
    ParameterSet &params, const std::function<Var(Tape &)> &loss,
    double eps = 1e-5, std::size_t max_per_parameter = 0,
    std::uint64_t seed = 0);

}  // namespace smited

#endif  // SMITED_GRADCHECK_H_
