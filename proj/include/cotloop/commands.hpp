// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch commands behind the CLI and the C API. Each takes a JSON config and
// returns a JSON report that embeds its manifest.

#pragma once

#include <string>

#include "cotloop/io.hpp"

namespace cotloop::cmd {

using io::Json;

// config: {mode: cot|loop|circuit, input, fan_in_cap?, width?, precision?}
// -> {program, layout, report}
Json compile(const Json& config);

// config: {input, mode?, inputs?: [[token...]], random?: count, seed?, budget?}
Json run(const Json& config);

// config: {input, mode?, program?, samples?, seed?, precision?}
Json verify(const Json& config);

// config: {input, gamma, alpha (number or "schedule"), delta, epsilon, seed,
//          samples?, p_source?, failure_mode?}
Json sample(const Json& config);

// config: {input, gamma, alpha, delta, seed, runs?, failure_mode?}
Json count(const Json& config);

// config: {fault?, seed?, faults?: bool}
Json selfcheck(const Json& config);

// Dispatch by name; throws kInvalidArgument for unknown commands.
Json dispatch(const std::string& command, const Json& config);

}  // namespace cotloop::cmd
