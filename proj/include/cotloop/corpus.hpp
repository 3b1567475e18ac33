// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded random computation graphs, threshold circuits and inputs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cotloop/graph.hpp"
#include "cotloop/loop_compiler.hpp"
#include "cotloop/rng.hpp"

namespace cotloop::corpus {

struct GraphOptions {
  int min_inputs = 1;
  int max_inputs = 12;
  std::size_t max_nodes = 48;
  // Total nodes are also capped at nodes_per_input * n, which bounds the
  // looped width W.
  std::size_t nodes_per_input = 4;
  int fan_in = 3;
  int min_alphabet = 2;
  int max_alphabet = 4;
  int max_functions = 4;
  int max_outputs = 3;
};

graph::CompGraph random_graph(Rng& rng, const GraphOptions& opts = {});
std::vector<graph::CompGraph> graph_corpus(std::uint64_t seed, std::size_t count, const GraphOptions& opts = {});

struct CircuitOptions {
  int min_inputs = 2;
  int max_inputs = 10;
  int max_depth = 5;
  int max_gates_per_layer = 4;
  int max_fan_in = 5;
};

loop::ThresholdCircuit random_circuit(Rng& rng, const CircuitOptions& opts = {});
std::vector<loop::ThresholdCircuit> circuit_corpus(std::uint64_t seed, std::size_t count,
                                                   const CircuitOptions& opts = {});

std::vector<std::vector<graph::Symbol>> random_inputs(Rng& rng, const graph::CompGraph& g, std::size_t count);

}  // namespace cotloop::corpus
