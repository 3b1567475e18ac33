// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used only by tests. None of these call into the
// library's evaluators; they recompute answers from the raw data structures.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "cotloop/graph.hpp"
#include "cotloop/loop_compiler.hpp"

namespace oracle {

using cotloop::graph::CompGraph;
using cotloop::graph::NodeId;
using cotloop::graph::Symbol;

// Memoized recursion on node ids. Table lookups are row-major with the
// first argument most significant.
inline std::vector<Symbol> evaluate(const CompGraph& g, const std::vector<Symbol>& x) {
  std::map<NodeId, const cotloop::graph::Node*> by_id;
  std::vector<NodeId> inputs;
  for (const auto& n : g.nodes) {
    by_id[n.id] = &n;
    if (n.kind == cotloop::graph::NodeKind::kInput) inputs.push_back(n.id);
  }
  std::sort(inputs.begin(), inputs.end());  // inputs are read in id order
  std::map<NodeId, Symbol> input_value;
  for (std::size_t i = 0; i < inputs.size(); ++i) input_value[inputs[i]] = x.at(i);
  const auto sigma = static_cast<std::int64_t>(g.alphabet.size());
  std::map<NodeId, Symbol> memo;
  std::function<Symbol(NodeId)> value = [&](NodeId id) -> Symbol {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    const auto& n = *by_id.at(id);
    Symbol v = 0;
    if (n.kind == cotloop::graph::NodeKind::kInput) {
      v = input_value.at(id);
    } else if (n.kind == cotloop::graph::NodeKind::kOutput) {
      v = value(n.preds.at(0));
    } else if (n.fn == cotloop::graph::kIdentityLabel) {
      v = value(n.preds.at(0));
    } else {
      const auto& f = g.functions.at(n.fn);
      std::int64_t idx = 0;
      for (auto p : n.preds) idx = idx * sigma + value(p);
      v = f.table.at(static_cast<std::size_t>(idx));
    }
    memo[id] = v;
    return v;
  };
  std::vector<Symbol> out;
  for (auto o : g.outputs) out.push_back(value(o));
  return out;
}

// Longest input-to-node path, by recursion.
inline int depth(const CompGraph& g) {
  std::map<NodeId, const cotloop::graph::Node*> by_id;
  for (const auto& n : g.nodes) by_id[n.id] = &n;
  std::map<NodeId, int> memo;
  std::function<int(NodeId)> d = [&](NodeId id) -> int {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    int best = 0;
    for (auto p : by_id.at(id)->preds) best = std::max(best, d(p) + 1);
    return memo[id] = best;
  };
  int out = 0;
  for (const auto& n : g.nodes) out = std::max(out, d(n.id));
  return out;
}

inline int popcount(const std::vector<int>& bits) { return std::accumulate(bits.begin(), bits.end(), 0); }

inline int gate_truth(cotloop::loop::GateKind kind, const std::vector<int>& bits, int k = 0) {
  const int ones = popcount(bits);
  const int n = static_cast<int>(bits.size());
  switch (kind) {
    case cotloop::loop::GateKind::kAnd: return ones == n ? 1 : 0;
    case cotloop::loop::GateKind::kOr: return ones > 0 ? 1 : 0;
    case cotloop::loop::GateKind::kNot: return 1 - bits.at(0);
    case cotloop::loop::GateKind::kMaj: return 2 * ones > n ? 1 : 0;
    case cotloop::loop::GateKind::kThreshold: return ones >= k ? 1 : 0;
  }
  return -1;
}

inline int circuit_eval(const cotloop::loop::ThresholdCircuit& c, const std::vector<int>& bits) {
  std::map<std::int64_t, const cotloop::loop::Gate*> by_id;
  for (const auto& g : c.gates) by_id[g.id] = &g;
  std::map<std::int64_t, int> memo;
  std::function<int(std::int64_t)> value = [&](std::int64_t id) -> int {
    if (id < c.inputs) return bits.at(static_cast<std::size_t>(id));
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    const auto& g = *by_id.at(id);
    std::vector<int> args;
    for (auto p : g.preds) args.push_back(value(p));
    return memo[id] = gate_truth(g.kind, args, g.k);
  };
  return value(c.output);
}

inline int circuit_depth(const cotloop::loop::ThresholdCircuit& c) {
  std::map<std::int64_t, const cotloop::loop::Gate*> by_id;
  for (const auto& g : c.gates) by_id[g.id] = &g;
  std::function<int(std::int64_t)> d = [&](std::int64_t id) -> int {
    if (id < c.inputs) return 0;
    int best = 0;
    for (auto p : by_id.at(id)->preds) best = std::max(best, d(p) + 1);
    return best;
  };
  return d(c.output);
}

// Independent sets of a k-vertex path: F(k + 2) by the Fibonacci recurrence.
inline std::uint64_t fibonacci_path_count(int k) {
  std::uint64_t a = 1, b = 2;  // k = 0, k = 1
  if (k == 0) return a;
  for (int i = 1; i < k; ++i) {
    const auto c = a + b;
    a = b;
    b = c;
  }
  return b;
}

// Bit strings of length k with no two adjacent ones, lexicographic.
inline std::vector<std::vector<int>> path_solutions(int k) {
  std::vector<std::vector<int>> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << k); ++m) {
    std::vector<int> y(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) y[static_cast<std::size_t>(i)] = static_cast<int>((m >> (k - 1 - i)) & 1);
    bool ok = true;
    for (int i = 0; i + 1 < k; ++i) ok = ok && !(y[static_cast<std::size_t>(i)] && y[static_cast<std::size_t>(i + 1)]);
    if (ok) out.push_back(y);
  }
  return out;
}

// DIMACS-style literals over variables 1..vars.
inline std::uint64_t sat_count(int vars, const std::vector<std::vector<int>>& clauses) {
  std::uint64_t count = 0;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << vars); ++m) {
    bool all = true;
    for (const auto& c : clauses) {
      bool any = false;
      for (int lit : c) {
        const int v = std::abs(lit) - 1;
        const bool bit = ((m >> (vars - 1 - v)) & 1) != 0;
        any = any || (lit > 0 ? bit : !bit);
      }
      all = all && any;
    }
    if (all) ++count;
  }
  return count;
}

inline double tv(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace oracle
