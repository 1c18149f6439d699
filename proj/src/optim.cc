//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/optim.h"

#include <cmath>

#include "smited/error.h"

namespace smited {

void adam_step(ParameterSet &params, const Gradients &grads, AdamState &state,
               const AdamSettings &settings) {
  if (grads.size() != params.size()) {
    throw_shape_mismatch("adam_step", {params.size()}, {grads.size()});
  }
  if (state.first_moment.size() != params.size()) {
    state.first_moment.assign(params.size(), Tensor());
    state.second_moment.assign(params.size(), Tensor());
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(settings.beta1, t);
  const double c2 = 1.0 - std::pow(settings.beta2, t);
  for (std::size_t id = 0; id < params.size(); ++id) {
    Parameter &p = params[id];
    const Tensor &g = grads[id];
    if (!p.trainable || g.empty()) continue;
    if (g.shape() != p.value.shape()) {
      throw_shape_mismatch("adam_step", p.value.shape(), g.shape());
    }
    Tensor &m = state.first_moment[id];
    Tensor &v = state.second_moment[id];
    if (m.empty()) {
      m = Tensor(p.value.shape());
      v = Tensor(p.value.shape());
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = settings.beta1 * m[i] + (1.0 - settings.beta1) * g[i];
      v[i] = settings.beta2 * v[i] + (1.0 - settings.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      double updated =
          p.value[i] - settings.lr * mhat / (std::sqrt(vhat) + settings.eps);
      if (settings.round_to_f32) {
        updated = static_cast<double>(static_cast<float>(updated));
      }
      p.value[i] = updated;
    }
  }
}

void round_parameters_to_f32(ParameterSet &params) {
  for (auto &p : params) {
    for (double &v : p.value.storage()) {
      v = static_cast<double>(static_cast<float>(v));
    }
  }
}

}  // namespace smited
