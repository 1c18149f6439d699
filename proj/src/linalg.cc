//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/linalg.h"

#include <Eigen/Core>

namespace smited::linalg {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

}  // namespace

void gemm(const Tensor &a, bool transpose_a, const Tensor &b, bool transpose_b,
          Tensor &out, bool accumulate) {
  ConstMap ma(a.data().data(), a.dim(0), a.dim(1));
  ConstMap mb(b.data().data(), b.dim(0), b.dim(1));
  MutMap mo(out.data().data(), out.dim(0), out.dim(1));
  if (!accumulate) mo.setZero();
  if (transpose_a && transpose_b) {
    mo.noalias() += ma.transpose() * mb.transpose();
  } else if (transpose_a) {
    mo.noalias() += ma.transpose() * mb;
  } else if (transpose_b) {
    mo.noalias() += ma * mb.transpose();
  } else {
    mo.noalias() += ma * mb;
  }
}

}  // namespace smited::linalg
