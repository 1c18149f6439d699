//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_ATTENTION_H_
#define SMITED_ATTENTION_H_

#include <cstddef>
#include <span>
#include <vector>

#include "smited/autograd.h"
#include "smited/rng.h"
#include "smited/tensor.h"

namespace smited {

inline constexpr double kRopeBase = 10000.0;
inline constexpr double kAttentionDenominatorFloor = 1e-8;

// Rotary position rotation of one head vector: consecutive pairs
// (2i, 2i+1) turn by angle position * base^(-2i/d). Throws
// NumericalError("OddHeadDim").
std::vector<double> rotate(std::span<const double> v, double position,
                           double base = kRopeBase);

// Gaussian projection [m, d] for the positive random-feature map.
Tensor random_feature_projection(std::size_t m, std::size_t d, Rng &rng);

// Reference feature map without stabilization:
// phi(u)_j = exp(w_j . u - |u|^2 / 2) / sqrt(m).
std::vector<double> feature_map(std::span<const double> u,
                                const Tensor &projection);

enum class FeatureStabilizer {
  kNone,
  // Subtracts each row's maximum exponent; cancels in the query-side ratio.
  kPerRow,
  // Subtracts one maximum over the unmasked rows; cancels on the key side.
  kShared,
};

namespace ad {

// Applies rotate() to every head of x [N, heads * d], row r at position r.
Var rotary(const Var &x, std::size_t heads, double base = kRopeBase);

// Row-wise positive random features of u [N, d] -> [N, m]. Rows with
// row_mask == 0 map to zeros; an empty mask keeps every row. Stabilizer
// offsets are treated as constants in the backward pass.
Var random_features(const Var &u, const Tensor &projection,
                    std::span<const double> row_mask,
                    FeatureStabilizer stabilizer);

}  // namespace ad

// Kernelized attention for one head in linear time:
//   out_i = phi(q_i) . sum_n phi(k_n) v_n^T / phi(q_i) . sum_n phi(k_n)
// q, k [N, d] are used as given (rotate and scale beforehand), v [N, dv].
// Keys with key_mask == 0 are excluded from both sums.
Var linear_attention(const Var &q, const Var &k, const Var &v,
                     const Tensor &projection,
                     std::span<const double> key_mask);

}  // namespace smited

#endif  // SMITED_ATTENTION_H_
