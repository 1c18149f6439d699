//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_GRADSUITE_H_
#define SMITED_GRADSUITE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "smited/gradcheck.h"
#include "smited/model.h"

namespace smited {

struct GradSuiteEntry {
  std::string name;
  std::uint64_t seed = 0;
  GradCheckResult result;
};

// Model used by the end-to-end check: the desk architecture (2 layers,
// L = 64, 4 heads, D = 32) over a small fixed vocabulary.
ModelConfig gradient_suite_model_config();

// Finite-difference checks of every differentiable op on random shapes,
// plus masked-LM and reconstruction losses of a fresh model over sampled
// coordinates of every trainable parameter. One entry per op per case;
// case i uses seed + i.
std::vector<GradSuiteEntry> gradient_suite(std::size_t cases, std::uint64_t seed,
                                           bool include_model = true);

}  // namespace smited

#endif  // SMITED_GRADSUITE_H_
