// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Computation graph -> one-layer causal CoT program that decodes the value of
// one node per step, in topological order.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cotloop/graph.hpp"
#include "cotloop/layout.hpp"
#include "cotloop/tfcore.hpp"

namespace cotloop::cot {

struct CotOptions {
  int fan_in_cap = 3;
  // Upper bound on |V|; larger graphs are rejected before building tables.
  std::size_t node_cap = 4096;
};

struct CotCompilation {
  tf::TransformerProgram program;
  Layout layout;
  std::vector<graph::NodeId> order;  // topological order, position i holds order[i-1]
  std::vector<std::string> labels;   // expert k computes labels[k]
  int position_bits = 0;
};

CotCompilation compile_cot(const graph::CompGraph& g, const CotOptions& opts = {});

// Number of non-input nodes.
std::size_t cot_step_count(const graph::CompGraph& g);

struct CotMismatch {
  std::vector<graph::Symbol> input;
  std::vector<graph::Symbol> expected;
  std::vector<graph::Symbol> got;
  std::string note;
};

struct CotReport {
  bool pass = false;
  std::size_t samples = 0;
  std::size_t mismatches = 0;
  // Steps where the decoded token differs from the oracle value of that node.
  std::size_t trace_mismatches = 0;
  std::size_t steps = 0;
  std::size_t expected_steps = 0;
  std::size_t size = 0;  // |V|
  int depth = 0;
  std::vector<CotMismatch> examples;  // first few failures
};

CotReport verify_cot(const graph::CompGraph& g, const CotCompilation& c,
                     const std::vector<std::vector<graph::Symbol>>& inputs);

}  // namespace cotloop::cot
