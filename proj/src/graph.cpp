// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/graph.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include "cotloop/errors.hpp"

namespace cotloop::graph {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::kInput: return "input";
    case NodeKind::kFunc: return "func";
    case NodeKind::kOutput: return "output";
  }
  return "?";
}

Symbol LocalFunction::apply(std::span<const Symbol> args, std::size_t alphabet_size) const {
  if (static_cast<int>(args.size()) != arity) {
    throw Error(ErrorCode::kArity, "local function expects " + std::to_string(arity) +
                                       " arguments, got " + std::to_string(args.size()));
  }
  std::size_t row = 0;
  for (auto a : args) {
    if (a < 0 || static_cast<std::size_t>(a) >= alphabet_size) {
      throw Error(ErrorCode::kOutOfRange, "local function argument outside the alphabet");
    }
    row = row * alphabet_size + static_cast<std::size_t>(a);
  }
  return table.at(row);
}

LocalFunction identity_function(std::size_t alphabet_size) {
  LocalFunction f;
  f.arity = 1;
  for (std::size_t i = 0; i < alphabet_size; ++i) f.table.push_back(static_cast<Symbol>(i));
  return f;
}

std::vector<NodeId> CompGraph::input_ids() const {
  std::vector<NodeId> ids;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::kInput) ids.push_back(n.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::size_t CompGraph::num_inputs() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const Node& n) { return n.kind == NodeKind::kInput; }));
}

std::string CompGraph::label_of(const Node& node) const {
  return node.kind == NodeKind::kOutput ? std::string(kIdentityLabel) : node.fn;
}

LocalFunction CompGraph::function_for(const std::string& label) const {
  if (auto it = functions.find(label); it != functions.end()) return it->second;
  if (label == kIdentityLabel) return identity_function(alphabet.size());
  throw Error(ErrorCode::kValidation, "unknown function label '" + label + "'");
}

std::map<NodeId, std::size_t> CompGraph::index() const {
  std::map<NodeId, std::size_t> idx;
  for (std::size_t i = 0; i < nodes.size(); ++i) idx.emplace(nodes[i].id, i);
  return idx;
}

namespace {

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Kahn over all nodes; returns the nodes left over when a cycle exists.
std::vector<NodeId> kahn_leftover(const CompGraph& g, const std::map<NodeId, std::size_t>& idx) {
  std::map<NodeId, int> indeg;
  std::map<NodeId, std::vector<NodeId>> succ;
  for (const auto& n : g.nodes) indeg[n.id];
  for (const auto& n : g.nodes) {
    for (auto p : n.preds) {
      if (!idx.count(p)) continue;
      ++indeg[n.id];
      succ[p].push_back(n.id);
    }
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (const auto& [id, d] : indeg) {
    if (d == 0) ready.push(id);
  }
  while (!ready.empty()) {
    auto u = ready.top();
    ready.pop();
    indeg.erase(u);
    for (auto v : succ[u]) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  std::vector<NodeId> left;
  for (const auto& [id, d] : indeg) left.push_back(id);
  return left;
}

}  // namespace

std::vector<Diagnostic> validate(const CompGraph& g, const ValidationOptions& opts) {
  std::vector<Diagnostic> diags;
  auto add = [&](std::string code, std::optional<NodeId> node, std::string msg) {
    diags.push_back({std::move(code), node, std::move(msg)});
  };
  const std::size_t sigma = g.alphabet.size();

  if (g.nodes.size() > opts.node_cap) {
    add("node cap", std::nullopt,
        "graph has " + std::to_string(g.nodes.size()) + " nodes, cap is " +
            std::to_string(opts.node_cap));
  }
  if (sigma == 0 && !g.nodes.empty()) add("empty alphabet", std::nullopt, "alphabet is empty");
  {
    std::set<std::string> seen;
    for (const auto& s : g.alphabet) {
      if (!seen.insert(s).second) add("duplicate symbol", std::nullopt, "symbol '" + s + "' repeated");
    }
  }

  for (const auto& [label, f] : g.functions) {
    const bool builtin_identity =
        label == kIdentityLabel && f.arity == 1 && f.table == identity_function(sigma).table;
    if (label.rfind("__", 0) == 0 && !builtin_identity) {
      add("reserved label", std::nullopt, "function label '" + label + "' uses the reserved prefix");
    }
    if (f.arity < 1) {
      add("arity", std::nullopt, "function '" + label + "' must take at least one argument");
      continue;
    }
    if (f.arity > opts.fan_in_cap) {
      add("fan-in exceeds cap", std::nullopt,
          "function '" + label + "' has arity " + std::to_string(f.arity) + " > C = " +
              std::to_string(opts.fan_in_cap));
      continue;
    }
    if (f.table.size() != ipow(sigma, f.arity)) {
      add("table size", std::nullopt,
          "function '" + label + "' table has " + std::to_string(f.table.size()) +
              " entries, expected " + std::to_string(ipow(sigma, f.arity)));
    }
    for (auto s : f.table) {
      if (s < 0 || static_cast<std::size_t>(s) >= sigma) {
        add("table symbol", std::nullopt, "function '" + label + "' maps outside the alphabet");
        break;
      }
    }
  }

  std::map<NodeId, std::size_t> idx;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!idx.emplace(g.nodes[i].id, i).second) {
      add("duplicate id", g.nodes[i].id, "node id " + std::to_string(g.nodes[i].id) + " repeated");
    }
  }

  std::map<NodeId, int> outdeg;
  bool has_compute = false;
  for (const auto& n : g.nodes) {
    const auto nid = std::to_string(n.id);
    for (auto p : n.preds) {
      if (!idx.count(p)) {
        add("unknown node", n.id, "node " + nid + " references missing predecessor " + std::to_string(p));
      } else {
        ++outdeg[p];
      }
    }
    switch (n.kind) {
      case NodeKind::kInput:
        if (!n.preds.empty()) add("input has predecessors", n.id, "input node " + nid + " has predecessors");
        break;
      case NodeKind::kOutput:
        has_compute = true;
        if (n.preds.size() != 1) {
          add("arity mismatch", n.id, "output marker " + nid + " needs exactly one predecessor");
        }
        break;
      case NodeKind::kFunc: {
        has_compute = true;
        if (static_cast<int>(n.preds.size()) > opts.fan_in_cap) {
          add("fan-in exceeds cap", n.id,
              "node " + nid + " has in-degree " + std::to_string(n.preds.size()) + " > C = " +
                  std::to_string(opts.fan_in_cap));
        }
        auto it = g.functions.find(n.fn);
        int arity = 1;
        if (it != g.functions.end()) {
          arity = it->second.arity;
        } else if (n.fn != kIdentityLabel) {
          add("unknown function", n.id, "node " + nid + " uses undefined function '" + n.fn + "'");
          break;
        }
        if (static_cast<int>(n.preds.size()) != arity) {
          add("arity mismatch", n.id,
              "node " + nid + " has " + std::to_string(n.preds.size()) + " predecessors but '" +
                  n.fn + "' has arity " + std::to_string(arity));
        }
        break;
      }
    }
  }

  std::set<NodeId> seen_out;
  const auto inputs = g.input_ids();
  for (std::size_t k = 0; k < g.outputs.size(); ++k) {
    const auto o = g.outputs[k];
    if (!idx.count(o)) {
      add("unknown node", o, "output references missing node " + std::to_string(o));
      continue;
    }
    if (!seen_out.insert(o).second) add("duplicate output", o, "node " + std::to_string(o) + " listed twice");
    if (outdeg[o] != 0) add("output has successors", o, "output node " + std::to_string(o) + " has out-degree > 0");
    if (g.nodes[idx[o]].kind == NodeKind::kInput) {
      // Bare inputs can only be answers when nothing is computed, and then
      // they must be the trailing inputs in order.
      const std::size_t pos = inputs.size() - g.outputs.size() + k;
      if (has_compute || g.outputs.size() > inputs.size() || inputs[pos] != o) {
        add("output is input", o,
            "input node " + std::to_string(o) +
                " used as output; wrap it in an output marker node");
      }
    }
  }

  if (!g.nodes.empty()) {
    auto left = kahn_leftover(g, idx);
    if (!left.empty()) {
      add("cycle", left.front(), "cycle through node " + std::to_string(left.front()));
    }
  }
  return diags;
}

void require_valid(const CompGraph& g, const ValidationOptions& opts) {
  auto diags = validate(g, opts);
  if (diags.empty()) return;
  const auto& d = diags.front();
  ErrorCode code = ErrorCode::kValidation;
  if (d.code == "cycle") code = ErrorCode::kCycle;
  if (d.code == "arity mismatch") code = ErrorCode::kArity;
  if (d.code == "fan-in exceeds cap") code = ErrorCode::kFanIn;
  throw Error(code, d.code + ": " + d.message);
}

std::vector<NodeId> topo_order(const CompGraph& g) {
  const auto idx = g.index();
  std::set<NodeId> is_output(g.outputs.begin(), g.outputs.end());
  std::vector<NodeId> order = g.input_ids();
  std::set<NodeId> placed(order.begin(), order.end());

  std::map<NodeId, int> indeg;
  std::map<NodeId, std::vector<NodeId>> succ;
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::kInput || is_output.count(n.id)) continue;
    indeg[n.id];
  }
  for (const auto& n : g.nodes) {
    if (!indeg.count(n.id)) continue;
    for (auto p : n.preds) {
      if (placed.count(p)) continue;
      if (is_output.count(p)) {
        throw Error(ErrorCode::kValidation, "output node " + std::to_string(p) + " has successors");
      }
      ++indeg[n.id];
      succ[p].push_back(n.id);
    }
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (const auto& [id, d] : indeg) {
    if (d == 0) ready.push(id);
  }
  std::size_t emitted = 0;
  while (!ready.empty()) {
    auto u = ready.top();
    ready.pop();
    order.push_back(u);
    ++emitted;
    for (auto v : succ[u]) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  if (emitted != indeg.size()) {
    for (const auto& [id, d] : indeg) {
      if (d > 0) throw Error(ErrorCode::kCycle, "cycle through node " + std::to_string(id));
    }
  }
  for (auto o : g.outputs) {
    if (!placed.count(o)) order.push_back(o);
  }
  for (auto o : g.outputs) {
    // Outputs must come after their own predecessors, which holds because
    // everything else was emitted first; detect an output feeding an output.
    for (auto p : g.nodes[idx.at(o)].preds) {
      if (is_output.count(p)) {
        throw Error(ErrorCode::kValidation, "output node " + std::to_string(p) + " has successors");
      }
    }
  }
  return order;
}

LayerDecomposition layerize(const CompGraph& g) {
  LayerDecomposition ld;
  if (g.nodes.empty()) return ld;
  const auto idx = g.index();
  for (auto id : topo_order(g)) {
    int d = 0;
    for (auto p : g.nodes[idx.at(id)].preds) d = std::max(d, ld.depth_of.at(p) + 1);
    ld.depth_of[id] = d;
  }
  int depth = 0;
  for (const auto& [id, d] : ld.depth_of) depth = std::max(depth, d);
  ld.layers.assign(static_cast<std::size_t>(depth) + 1, {});
  for (const auto& [id, d] : ld.depth_of) ld.layers[static_cast<std::size_t>(d)].push_back(id);
  return ld;
}

CompGraph strict_layered_expansion(const CompGraph& g) {
  CompGraph out = g;
  if (g.nodes.empty()) return out;
  const auto ld = layerize(g);
  const auto idx = g.index();
  NodeId next_id = 0;
  for (const auto& n : g.nodes) next_id = std::max(next_id, n.id + 1);

  // copies[(u, d)] is the identity copy of u living at depth d.
  std::map<std::pair<NodeId, int>, NodeId> copies;
  auto copy_at = [&](NodeId u, int d) {
    const int du = ld.depth_of.at(u);
    NodeId prev = u;
    for (int k = du + 1; k <= d; ++k) {
      auto [it, fresh] = copies.try_emplace({u, k}, next_id);
      if (fresh) {
        out.nodes.push_back(Node{next_id, NodeKind::kFunc, kIdentityLabel, {prev}});
        ++next_id;
      }
      prev = it->second;
    }
    return prev;
  };

  for (auto id : topo_order(g)) {
    auto& node = out.nodes[idx.at(id)];
    const int dv = ld.depth_of.at(id);
    for (auto& p : node.preds) {
      if (dv - ld.depth_of.at(p) > 1) p = copy_at(p, dv - 1);
    }
  }
  if (!copies.empty()) out.functions[kIdentityLabel] = identity_function(g.alphabet.size());
  return out;
}

std::size_t parallel_space(const CompGraph& g) {
  if (g.nodes.empty()) return 0;
  const auto ld = layerize(g);
  std::size_t best = 0;
  for (int l = 0; l <= ld.depth(); ++l) {
    std::set<NodeId> live(ld.layers[static_cast<std::size_t>(l)].begin(),
                          ld.layers[static_cast<std::size_t>(l)].end());
    for (const auto& n : g.nodes) {
      if (ld.depth_of.at(n.id) <= l) continue;
      for (auto p : n.preds) {
        if (ld.depth_of.at(p) <= l) live.insert(p);
      }
    }
    best = std::max(best, live.size());
  }
  return best;
}

std::size_t max_layer_width(const CompGraph& g) {
  std::size_t w = 0;
  for (const auto& layer : layerize(g).layers) w = std::max(w, layer.size());
  return w;
}

std::map<NodeId, Symbol> evaluate_all(const CompGraph& g, std::span<const Symbol> x) {
  const auto inputs = g.input_ids();
  if (x.size() != inputs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "evaluate: expected " + std::to_string(inputs.size()) +
                                                 " input symbols, got " + std::to_string(x.size()));
  }
  const auto sigma = g.alphabet.size();
  std::map<NodeId, Symbol> val;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (x[k] < 0 || static_cast<std::size_t>(x[k]) >= sigma) {
      throw Error(ErrorCode::kOutOfRange, "evaluate: input " + std::to_string(k) + " not in the alphabet");
    }
    val[inputs[k]] = x[k];
  }
  const auto idx = g.index();
  std::map<std::string, LocalFunction> fns;
  std::vector<Symbol> args;
  for (auto id : topo_order(g)) {
    const auto& n = g.nodes[idx.at(id)];
    if (n.kind == NodeKind::kInput) continue;
    const auto label = g.label_of(n);
    auto it = fns.find(label);
    if (it == fns.end()) it = fns.emplace(label, g.function_for(label)).first;
    args.clear();
    for (auto p : n.preds) args.push_back(val.at(p));
    val[id] = it->second.apply(args, sigma);
  }
  return val;
}

std::vector<Symbol> evaluate(const CompGraph& g, std::span<const Symbol> x) {
  const auto val = evaluate_all(g, x);
  std::vector<Symbol> out;
  out.reserve(g.outputs.size());
  for (auto o : g.outputs) out.push_back(val.at(o));
  return out;
}

Symbol symbol_index(const CompGraph& g, const std::string& symbol) {
  auto it = std::find(g.alphabet.begin(), g.alphabet.end(), symbol);
  if (it == g.alphabet.end()) throw Error(ErrorCode::kOutOfRange, "symbol '" + symbol + "' not in the alphabet");
  return static_cast<Symbol>(it - g.alphabet.begin());
}

std::vector<Symbol> parse_symbols(const CompGraph& g, std::span<const std::string> tokens) {
  std::vector<Symbol> out;
  for (const auto& t : tokens) out.push_back(symbol_index(g, t));
  return out;
}

}  // namespace cotloop::graph
