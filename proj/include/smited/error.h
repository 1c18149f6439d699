//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_ERROR_H_
#define SMITED_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace smited {

// Coarse failure class; the CLI maps each to an exit code.
enum class ErrorCategory {
  kUsage = 2,
  kData = 3,
  kNumerical = 4,
};

std::string_view category_name(ErrorCategory category);

// Base of every exception thrown by the library. `kind()` is a stable
// machine-readable tag such as "ShapeMismatch" or "UnclosedRingBond".
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string kind, const std::string &message)
      : std::runtime_error(message), category_(category),
        kind_(std::move(kind)) { }

  ErrorCategory category() const noexcept { return category_; }
  const std::string &kind() const noexcept { return kind_; }

 private:
  ErrorCategory category_;
  std::string kind_;
};

class DataError : public Error {
 public:
  DataError(std::string kind, const std::string &message)
      : Error(ErrorCategory::kData, std::move(kind), message) { }
};

class NumericalError : public Error {
 public:
  NumericalError(std::string kind, const std::string &message)
      : Error(ErrorCategory::kNumerical, std::move(kind), message) { }
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string &message)
      : Error(ErrorCategory::kUsage, "UsageError", message) { }
  UsageError(std::string kind, const std::string &message)
      : Error(ErrorCategory::kUsage, std::move(kind), message) { }
};

}  // namespace smited

#endif  // SMITED_ERROR_H_
