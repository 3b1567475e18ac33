// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/errors.hpp"

namespace cotloop {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kValidation: return "Validation";
    case ErrorCode::kCycle: return "Cycle";
    case ErrorCode::kArity: return "Arity";
    case ErrorCode::kFanIn: return "FanIn";
    case ErrorCode::kWidth: return "WidthViolation";
    case ErrorCode::kBudget: return "BudgetExceedsTable";
    case ErrorCode::kBudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::kMarginViolated: return "MarginViolated";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kDeadEnd: return "DeadEnd";
    case ErrorCode::kEmptySolutionSet: return "EmptySolutionSet";
    case ErrorCode::kAllRejected: return "AllRejected";
    case ErrorCode::kZeroPath: return "ZeroPath";
    case ErrorCode::kConsistency: return "Consistency";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace cotloop
