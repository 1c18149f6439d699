//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_METRICS_H_
#define SMITED_METRICS_H_

#include <span>

namespace smited {

// Probability that a random positive outscores a random negative, ties
// counting one half. Labels are 0/1. Throws DataError("SingleClass") when
// either class is absent, DataError("LabelShapeMismatch") on unequal sizes.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

// Throw DataError("LabelShapeMismatch") on unequal sizes and
// DataError("EmptyInput") on empty input.
double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);

}  // namespace smited

#endif  // SMITED_METRICS_H_
