//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "smited/error.h"

namespace smited {
namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DataError("LabelShapeMismatch", std::to_string(a) + " predictions for " +
                                              std::to_string(b) + " labels");
  }
  if (a == 0) throw DataError("EmptyInput", "no predictions");
}

}  // namespace

// Mann-Whitney form: sum of positive ranks with tied groups sharing their
// mean rank.
double roc_auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) check_sizes(scores.size(), labels.size());
  std::size_t pos = 0, neg = 0;
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) {
      throw DataError("LabelShapeMismatch", "ROC-AUC labels must be 0 or 1");
    }
    (y == 1.0 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) {
    throw DataError("SingleClass", "ROC-AUC needs both classes present");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1.0) rank_sum += mean_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_sizes(pred.size(), truth.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_sizes(pred.size(), truth.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

}  // namespace smited
