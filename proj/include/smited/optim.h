//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_OPTIM_H_
#define SMITED_OPTIM_H_

#include <cstdint>
#include <vector>

#include "smited/parameters.h"

namespace smited {

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Round parameters to the nearest float after each update so the model
  // trains in 32-bit storage precision while computing in 64-bit.
  bool round_to_f32 = false;
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::int64_t step = 0;
};

// Bias-corrected adaptive-moment update:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
// Frozen parameters and parameters without a gradient are skipped.
void adam_step(ParameterSet &params, const Gradients &grads, AdamState &state,
               const AdamSettings &settings);

// Rounds every parameter value to float precision in place.
void round_parameters_to_f32(ParameterSet &params);

}  // namespace smited

#endif  // SMITED_OPTIM_H_
