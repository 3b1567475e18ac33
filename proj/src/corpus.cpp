// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/corpus.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace cotloop::corpus {

using graph::CompGraph;
using graph::NodeId;
using graph::NodeKind;

namespace {

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

}  // namespace

CompGraph random_graph(Rng& rng, const GraphOptions& opts) {
  CompGraph g;
  const int sigma = uniform_int(rng, opts.min_alphabet, opts.max_alphabet);
  for (int a = 0; a < sigma; ++a) g.alphabet.push_back(std::string(1, static_cast<char>('a' + a)));

  const int nfun = uniform_int(rng, 1, opts.max_functions);
  std::vector<std::string> labels;
  for (int f = 0; f < nfun; ++f) {
    graph::LocalFunction fn;
    fn.arity = uniform_int(rng, 1, opts.fan_in);
    std::size_t rows = 1;
    for (int c = 0; c < fn.arity; ++c) rows *= static_cast<std::size_t>(sigma);
    for (std::size_t r = 0; r < rows; ++r) fn.table.push_back(uniform_int(rng, 0, sigma - 1));
    labels.push_back("f" + std::to_string(f));
    g.functions[labels.back()] = std::move(fn);
  }

  const int n = uniform_int(rng, opts.min_inputs, opts.max_inputs);
  const std::size_t cap = std::min(opts.max_nodes, opts.nodes_per_input * static_cast<std::size_t>(n));
  const std::size_t total = static_cast<std::size_t>(n) + 1 +
                            uniform_index(rng, std::max<std::size_t>(1, cap - static_cast<std::size_t>(n)));
  for (int k = 0; k < n; ++k) g.nodes.push_back({k, NodeKind::kInput, "", {}});

  for (std::size_t id = static_cast<std::size_t>(n); id < total; ++id) {
    graph::Node node;
    node.id = static_cast<NodeId>(id);
    // Occasionally an output marker; it must stay a sink, so it is only
    // created as the very last node.
    if (id + 1 == total && bernoulli(rng, 0.15)) {
      node.kind = NodeKind::kOutput;
      node.preds = {static_cast<NodeId>(uniform_index(rng, id))};
      g.nodes.push_back(std::move(node));
      continue;
    }
    node.kind = NodeKind::kFunc;
    node.fn = labels[uniform_index(rng, labels.size())];
    const int arity = g.functions.at(node.fn).arity;
    for (int c = 0; c < arity; ++c) {
      // Half the edges come from the most recent nodes, which builds depth.
      const std::size_t recent = std::min<std::size_t>(id, 4);
      const std::size_t pred = bernoulli(rng, 0.5) ? id - 1 - uniform_index(rng, recent) : uniform_index(rng, id);
      node.preds.push_back(static_cast<NodeId>(pred));
    }
    g.nodes.push_back(std::move(node));
  }

  std::set<NodeId> has_succ;
  for (const auto& node : g.nodes) has_succ.insert(node.preds.begin(), node.preds.end());
  std::vector<NodeId> sinks;
  for (const auto& node : g.nodes) {
    if (node.kind != NodeKind::kInput && !has_succ.count(node.id)) sinks.push_back(node.id);
  }
  // The last node is always a sink; keep it and a few others.
  const std::size_t m = std::min<std::size_t>(
      {sinks.size(), static_cast<std::size_t>(n),
       1 + uniform_index(rng, static_cast<std::uint64_t>(opts.max_outputs))});
  std::vector<NodeId> chosen{sinks.back()};
  std::vector<NodeId> rest(sinks.begin(), sinks.end() - 1);
  while (chosen.size() < m && !rest.empty()) {
    const auto k = uniform_index(rng, rest.size());
    chosen.push_back(rest[k]);
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(chosen.begin(), chosen.end());
  g.outputs = chosen;
  return g;
}

std::vector<CompGraph> graph_corpus(std::uint64_t seed, std::size_t count, const GraphOptions& opts) {
  std::vector<CompGraph> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = make_rng(seed, {0x67, i});
    out.push_back(random_graph(rng, opts));
  }
  return out;
}

loop::ThresholdCircuit random_circuit(Rng& rng, const CircuitOptions& opts) {
  using loop::GateKind;
  loop::ThresholdCircuit c;
  c.inputs = uniform_int(rng, opts.min_inputs, opts.max_inputs);
  const int depth = uniform_int(rng, 1, opts.max_depth);
  std::vector<std::vector<std::int64_t>> layers(1);
  for (int j = 0; j < c.inputs; ++j) layers[0].push_back(j);
  std::vector<std::int64_t> earlier(layers[0]);
  std::int64_t next = c.inputs;
  for (int d = 1; d <= depth; ++d) {
    const int count = d == depth ? 1 : uniform_int(rng, 1, opts.max_gates_per_layer);
    std::vector<std::int64_t> layer;
    for (int k = 0; k < count; ++k) {
      loop::Gate gt;
      gt.id = next++;
      const auto& prev = layers.back();
      gt.kind = static_cast<GateKind>(uniform_index(rng, 5));
      const int fan = gt.kind == GateKind::kNot ? 1 : uniform_int(rng, 1, opts.max_fan_in);
      // First predecessor from the previous layer fixes the depth.
      gt.preds.push_back(prev[uniform_index(rng, prev.size())]);
      for (int f = 1; f < fan; ++f) gt.preds.push_back(earlier[uniform_index(rng, earlier.size())]);
      if (gt.kind == GateKind::kThreshold) gt.k = uniform_int(rng, 0, fan);
      layer.push_back(gt.id);
      c.gates.push_back(std::move(gt));
    }
    earlier.insert(earlier.end(), layer.begin(), layer.end());
    layers.push_back(std::move(layer));
  }
  c.output = layers.back().front();
  return c;
}

std::vector<loop::ThresholdCircuit> circuit_corpus(std::uint64_t seed, std::size_t count,
                                                   const CircuitOptions& opts) {
  std::vector<loop::ThresholdCircuit> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = make_rng(seed, {0x63, i});
    out.push_back(random_circuit(rng, opts));
  }
  return out;
}

std::vector<std::vector<graph::Symbol>> random_inputs(Rng& rng, const CompGraph& g, std::size_t count) {
  std::vector<std::vector<graph::Symbol>> out(count);
  const auto n = g.num_inputs();
  for (auto& x : out) {
    x.resize(n);
    for (auto& s : x) s = static_cast<graph::Symbol>(uniform_index(rng, g.alphabet.size()));
  }
  return out;
}

}  // namespace cotloop::corpus
