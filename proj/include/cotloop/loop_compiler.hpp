// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Computation graph -> looped program evaluating one depth layer per loop, and
// threshold circuit -> three-layer looped program evaluating every gate in
// parallel each loop.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cotloop/gates.hpp"
#include "cotloop/graph.hpp"
#include "cotloop/layout.hpp"
#include "cotloop/tfcore.hpp"

namespace cotloop::loop {

inline constexpr const char* kPadSymbol = "__pad";

struct LoopOptions {
  int fan_in_cap = 3;
  // Blocks per position; 0 picks ceil(S(g'')/n).
  std::size_t width = 0;
  std::size_t node_cap = 4096;
};

struct Placement {
  std::size_t position = 0;  // 1-based
  std::size_t block = 0;     // 0-based
};

struct LoopCompilation {
  tf::TransformerProgram program;
  // Per-block layout; block w occupies [w * block_dim, (w+1) * block_dim) after
  // the position-level prefix.
  Layout position_layout;
  Layout block_layout;
  std::size_t width = 0;
  int position_bits = 0;
  // Strict layered expansion with outputs carried to the last layer.
  graph::CompGraph expanded;
  graph::LayerDecomposition layers;
  std::map<graph::NodeId, Placement> placement;
  std::vector<std::string> labels;
  std::vector<std::string> symbols;  // alphabet then the pad symbol

  std::size_t value_slot(const Placement& at, std::size_t symbol) const;
};

LoopCompilation compile_looped(const graph::CompGraph& g, const LoopOptions& opts = {});

// Depth of the strict layered expansion.
std::size_t loop_count(const graph::CompGraph& g);

struct LoopMismatch {
  std::vector<graph::Symbol> input;
  std::vector<graph::Symbol> expected;
  std::vector<graph::Symbol> got;
  std::string note;
};

struct LoopReport {
  bool pass = false;
  std::size_t samples = 0;
  std::size_t mismatches = 0;
  std::size_t audit_failures = 0;
  // Earliest loop (1-based) where a block disagreed with the oracle.
  std::optional<std::size_t> first_divergent_loop;
  std::size_t loops = 0;
  std::size_t expected_loops = 0;
  std::size_t size = 0;
  std::size_t width = 0;
  std::size_t parallel_space = 0;
  std::vector<LoopMismatch> examples;
};

LoopReport verify_looped(const graph::CompGraph& g, const LoopCompilation& c,
                         const std::vector<std::vector<graph::Symbol>>& inputs, bool audit = true);

// Threshold circuits. Input j has id j (0-based); gate ids are >= inputs.
enum class GateKind { kAnd, kOr, kNot, kMaj, kThreshold };

const char* gate_kind_name(GateKind k);
GateKind parse_gate_kind(const std::string& s);

struct Gate {
  std::int64_t id = 0;
  GateKind kind = GateKind::kAnd;
  int k = 0;  // THRESHOLD only
  std::vector<std::int64_t> preds;
};

struct ThresholdCircuit {
  int inputs = 0;
  std::vector<Gate> gates;
  std::int64_t output = 0;

  // Throws kValidation / kCycle / kArity.
  void validate() const;
  // Gates in evaluation order (ascending id among ready gates).
  std::vector<std::size_t> topo_gates() const;
  // Depth of every node id (inputs 0).
  std::map<std::int64_t, int> depths() const;
  int depth() const;
  int evaluate(std::span<const int> bits) const;
  std::map<std::int64_t, int> evaluate_all(std::span<const int> bits) const;
};

enum class Precision { kLogBit, kConstantBit };

struct CircuitCompilation {
  tf::TransformerProgram program;
  Layout layout;
  std::vector<std::int64_t> node_order;  // node index -> id
  int depth = 0;
};

CircuitCompilation compile_circuit_looped(const ThresholdCircuit& c, Precision precision = Precision::kLogBit);

std::size_t loop_count(const ThresholdCircuit& c);

struct CircuitReport {
  bool pass = false;
  std::size_t samples = 0;
  std::size_t mismatches = 0;
  std::size_t audit_failures = 0;
  std::optional<std::size_t> first_divergent_loop;
  std::size_t loops = 0;
  std::size_t expected_loops = 0;
  std::size_t size = 0;
  std::vector<std::vector<int>> failing_inputs;  // first few
};

CircuitReport verify_circuit(const ThresholdCircuit& c, const CircuitCompilation& cc,
                             const std::vector<std::vector<int>>& inputs, bool audit = true);

// All 2^n inputs in lexicographic order (x_1 most significant).
std::vector<std::vector<int>> all_bit_vectors(int n);

}  // namespace cotloop::loop
