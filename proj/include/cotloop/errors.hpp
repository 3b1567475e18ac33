// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cotloop {

enum class ErrorCode {
  kInvalidArgument,
  kOverflow,
  kOutOfRange,
  kParse,
  kValidation,
  kCycle,
  kArity,
  kFanIn,
  kWidth,
  kBudget,
  kBudgetTooSmall,
  kMarginViolated,
  kCapExceeded,
  kDeadEnd,
  kEmptySolutionSet,
  kAllRejected,
  kZeroPath,
  kConsistency,
  kSupportMismatch,
  kIo,
};

const char* error_code_name(ErrorCode code);

// Single exception type for the library; the code decides the category and the
// message names the site.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cotloop
