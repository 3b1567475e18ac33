// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Embedded invariant suite and the fault-injection set used as negative
// controls.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cotloop::check {

// Test hook: corrupts one artifact inside the suite.
enum class Fault { kNone, kGateTable, kSelectorKey, kCotExpert };

const char* fault_name(Fault f);
Fault parse_fault(const std::string& s);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelfcheckReport {
  bool pass = true;
  std::vector<CheckResult> checks;
  std::optional<std::string> first_failure;
};

// Stops at the first failing check.
SelfcheckReport run_selfcheck(Fault injected = Fault::kNone, std::uint64_t seed = 1);

struct FaultCase {
  std::string name;
  // Name of the diagnostic that reported the fault (error code or report field).
  std::string diagnostic;
  std::string detail;
  bool detected = false;
  // Wrong answers observed with no diagnostic raised.
  std::size_t silent_wrong = 0;
};

std::vector<FaultCase> run_fault_injection(std::uint64_t seed = 1);

}  // namespace cotloop::check
