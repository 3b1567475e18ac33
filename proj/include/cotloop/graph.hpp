// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Computation-graph IR: a DAG of local functions over a finite alphabet,
// validation, layer passes and the reference evaluator every compiled program
// is checked against.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cotloop::graph {

using NodeId = std::int64_t;
// Index into CompGraph::alphabet.
using Symbol = int;

// Labels the library reserves; user functions may not use the "__" prefix.
inline constexpr const char* kIdentityLabel = "__id";
inline constexpr const char* kPadLabel = "__pad";
inline constexpr const char* kHaltLabel = "__halt";

enum class NodeKind {
  kInput,
  kFunc,
  // Identity of its single predecessor; lets an input value be exposed as an
  // output of a graph that also computes.
  kOutput,
};

const char* node_kind_name(NodeKind kind);

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::kFunc;
  std::string fn;
  std::vector<NodeId> preds;
};

struct LocalFunction {
  int arity = 0;
  // Row-major over Sigma^arity, first argument most significant.
  std::vector<Symbol> table;

  Symbol apply(std::span<const Symbol> args, std::size_t alphabet_size) const;
};

LocalFunction identity_function(std::size_t alphabet_size);

struct CompGraph {
  std::vector<std::string> alphabet;
  std::map<std::string, LocalFunction> functions;
  std::vector<Node> nodes;
  std::vector<NodeId> outputs;

  // Input node ids in ascending order; input token k feeds the k-th of these.
  std::vector<NodeId> input_ids() const;
  std::size_t num_inputs() const;
  // Function label a node evaluates (kOutput nodes evaluate the identity).
  std::string label_of(const Node& node) const;
  // Function for a label, including the built-in identity.
  LocalFunction function_for(const std::string& label) const;
  std::map<NodeId, std::size_t> index() const;
};

struct ValidationOptions {
  // Bound C on func-node in-degree.
  int fan_in_cap = 3;
  std::size_t node_cap = 1 << 16;
};

struct Diagnostic {
  std::string code;
  std::optional<NodeId> node;
  std::string message;
};

// Never throws; an empty result means the graph is valid.
std::vector<Diagnostic> validate(const CompGraph& g, const ValidationOptions& opts = {});
// Throws Error(kCycle / kArity / kFanIn / kValidation) naming the first problem.
void require_valid(const CompGraph& g, const ValidationOptions& opts = {});

// Inputs first (ascending id), then remaining nodes by Kahn's algorithm with
// ascending-id tie-break, then outputs in declared order.
std::vector<NodeId> topo_order(const CompGraph& g);

struct LayerDecomposition {
  std::vector<std::vector<NodeId>> layers;  // each sorted by id
  std::map<NodeId, int> depth_of;

  int depth() const { return layers.empty() ? 0 : static_cast<int>(layers.size()) - 1; }
};

LayerDecomposition layerize(const CompGraph& g);

// Replaces every edge spanning more than one layer by a chain of identity
// copies (one copy of the source per skipped layer, shared between edges).
CompGraph strict_layered_expansion(const CompGraph& g);

// Peak number of values live during layer-by-layer evaluation.
std::size_t parallel_space(const CompGraph& g);

std::size_t max_layer_width(const CompGraph& g);

// Reference evaluation; result follows `outputs`.
std::vector<Symbol> evaluate(const CompGraph& g, std::span<const Symbol> x);
// Value of every node.
std::map<NodeId, Symbol> evaluate_all(const CompGraph& g, std::span<const Symbol> x);

Symbol symbol_index(const CompGraph& g, const std::string& symbol);
std::vector<Symbol> parse_symbols(const CompGraph& g, std::span<const std::string> tokens);

}  // namespace cotloop::graph
