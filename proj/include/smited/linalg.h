//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_LINALG_H_
#define SMITED_LINALG_H_

#include "smited/tensor.h"

namespace smited::linalg {

// out (+)= op(a) @ op(b) for rank-2 tensors, where op transposes when the
// matching flag is set. Shapes are validated by the caller.
void gemm(const Tensor &a, bool transpose_a, const Tensor &b, bool transpose_b,
          Tensor &out, bool accumulate);

}  // namespace smited::linalg

#endif  // SMITED_LINALG_H_
