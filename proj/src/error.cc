//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/error.h"

namespace smited {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage: return "UsageError";
    case ErrorCategory::kData: return "DataError";
    case ErrorCategory::kNumerical: return "NumericalError";
  }
  return "Error";
}

}  // namespace smited
