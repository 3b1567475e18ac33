// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Looped graph construction, per loop t (computing depth layer t+1):
//   layer 1  heads (w,c) fetch every block value of the position holding
//            predecessor c of block w; the FF keeps the block named by the
//            predecessor's one-hot block selector and drops the rest.
//   layer 2  label-gated table lookup writes a proposal one-hot.
//   layer 3  commits the proposal into the value slot and clears every routing
//            field, so the state between loops holds value one-hots only.
// PE(., t) supplies the routing for loop t+1.

#include "cotloop/loop_compiler.hpp"

#include <algorithm>
#include <set>

#include "cotloop/errors.hpp"
#include "cotloop/fxp.hpp"

namespace cotloop::loop {

using graph::CompGraph;
using graph::NodeId;
using graph::NodeKind;
using tf::Raw;

namespace {

int bits_for_index(std::size_t max_index) { return std::max(1, fxp::bits_for_magnitude(max_index)); }

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Strict layered expansion plus identity chains lifting every output to the
// last layer.
CompGraph expand_for_loops(const CompGraph& g) {
  CompGraph gx = graph::strict_layered_expansion(g);
  if (gx.nodes.empty()) return gx;
  const auto ld = graph::layerize(gx);
  const int D = ld.depth();
  NodeId next = 0;
  for (const auto& n : gx.nodes) next = std::max(next, n.id + 1);
  bool chained = false;
  for (auto& o : gx.outputs) {
    NodeId prev = o;
    for (int d = ld.depth_of.at(o) + 1; d <= D; ++d) {
      gx.nodes.push_back(graph::Node{next, NodeKind::kFunc, graph::kIdentityLabel, {prev}});
      prev = next++;
      chained = true;
    }
    o = prev;
  }
  if (chained) gx.functions[graph::kIdentityLabel] = graph::identity_function(g.alphabet.size());
  return gx;
}

}  // namespace

std::size_t loop_count(const CompGraph& g) {
  if (g.nodes.empty()) return 0;
  return static_cast<std::size_t>(graph::layerize(graph::strict_layered_expansion(g)).depth());
}

std::size_t LoopCompilation::value_slot(const Placement& at, std::size_t symbol) const {
  return position_layout.dim() + at.block * block_layout.dim() + block_layout.at("value")[symbol];
}

LoopCompilation compile_looped(const CompGraph& g, const LoopOptions& opts) {
  graph::ValidationOptions vo;
  vo.fan_in_cap = opts.fan_in_cap;
  vo.node_cap = opts.node_cap;
  graph::require_valid(g, vo);
  const std::size_t n = g.num_inputs();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "compile_looped: graph has no inputs");
  if (g.outputs.size() > n) {
    throw Error(ErrorCode::kValidation, "compile_looped: " + std::to_string(g.outputs.size()) +
                                            " outputs but only " + std::to_string(n) + " positions");
  }
  if (std::find(g.alphabet.begin(), g.alphabet.end(), kPadSymbol) != g.alphabet.end()) {
    throw Error(ErrorCode::kValidation, std::string("alphabet may not contain ") + kPadSymbol);
  }

  LoopCompilation out;
  out.expanded = expand_for_loops(g);
  const auto& gx = out.expanded;
  out.layers = graph::layerize(gx);
  const auto& ld = out.layers;
  const std::size_t D = static_cast<std::size_t>(ld.depth());
  const std::size_t space = graph::parallel_space(gx);
  const std::size_t W = opts.width > 0 ? opts.width : std::max<std::size_t>(1, ceil_div(space, n));
  if (space > W * n) {
    throw Error(ErrorCode::kWidth, "parallel space " + std::to_string(space) + " exceeds W*n = " +
                                       std::to_string(W) + "*" + std::to_string(n));
  }
  out.width = W;

  // Placement. Slot index (i-1)*W + w.
  const auto inputs = gx.input_ids();
  for (std::size_t k = 0; k < n; ++k) out.placement[inputs[k]] = {k + 1, 0};
  for (std::size_t t = 1; t <= D; ++t) {
    std::vector<bool> taken(W * n, false);
    std::set<NodeId> fixed;
    if (t == D) {
      const std::size_t m_out = gx.outputs.size();
      for (std::size_t k = 0; k < m_out; ++k) {
        const std::size_t pos = n - m_out + k + 1;
        out.placement[gx.outputs[k]] = {pos, 0};
        taken[(pos - 1) * W] = true;
        fixed.insert(gx.outputs[k]);
      }
    }
    std::size_t cursor = 0;
    for (auto v : ld.layers[t]) {
      if (fixed.count(v)) continue;
      while (cursor < taken.size() && taken[cursor]) ++cursor;
      if (cursor == taken.size()) {
        throw Error(ErrorCode::kWidth, "layer " + std::to_string(t) + " has more than W*n nodes");
      }
      taken[cursor] = true;
      out.placement[v] = {cursor / W + 1, cursor % W};
    }
  }

  const std::size_t sigma = g.alphabet.size();
  const std::size_t S = sigma + 1;  // with pad
  const std::size_t pad = sigma;
  out.symbols = g.alphabet;
  out.symbols.push_back(kPadSymbol);

  std::set<std::string> used{graph::kIdentityLabel};
  for (const auto& node : gx.nodes) {
    if (node.kind != NodeKind::kInput) used.insert(gx.label_of(node));
  }
  out.labels.assign(used.begin(), used.end());
  out.labels.push_back(graph::kPadLabel);
  out.labels.push_back(graph::kHaltLabel);
  const std::size_t F = out.labels.size();
  auto label_index = [&](const std::string& l) {
    return static_cast<std::size_t>(std::find(out.labels.begin(), out.labels.end(), l) - out.labels.begin());
  };

  const std::size_t C = static_cast<std::size_t>(opts.fan_in_cap);
  const int p = bits_for_index(n);
  const std::size_t P = static_cast<std::size_t>(p);
  out.position_bits = p;

  auto& PL = out.position_layout;
  PL.add("one", 1);
  PL.add("position", P);
  auto& BL = out.block_layout;
  BL.add("value", S);
  BL.add("label", F);
  BL.add("pred_position", C * P);
  BL.add("pred_block", C * W);
  BL.add("stage", C * W * S);
  BL.add("scratch", C * S);
  BL.add("proposal", S);
  const std::size_t bdim = BL.dim();
  const std::size_t m = PL.dim() + W * bdim;

  const std::size_t one_slot = PL.at("one")[0];
  const auto& pos_r = PL.at("position");
  // Hot lookups resolved once.
  const std::size_t o_value = BL.at("value").offset, o_label = BL.at("label").offset,
                    o_ppos = BL.at("pred_position").offset, o_psel = BL.at("pred_block").offset,
                    o_stage = BL.at("stage").offset, o_scr = BL.at("scratch").offset,
                    o_prop = BL.at("proposal").offset;
  auto at = [&](std::size_t w, std::size_t off, std::size_t k) { return PL.dim() + w * bdim + off + k; };

  const int frac = std::max(p, 2);
  const std::int64_t K = std::int64_t{1} << frac;
  const std::int64_t key_scale = std::int64_t{1} << (p + 1);
  const std::uint64_t max_mag = std::max<std::uint64_t>(
      {static_cast<std::uint64_t>(2 * p) * static_cast<std::uint64_t>(key_scale),
       static_cast<std::uint64_t>(K) + 2, C + 2, W + 2, S + 2});
  const auto fmt = fxp::format_for(max_mag, frac);
  const Raw one = fmt.one();

  auto& prog = out.program;
  prog.fmt = fmt;
  prog.embed_dim = m;
  prog.vocab = out.symbols;
  prog.mode = tf::Mode::kLooped;
  prog.mask = tf::Mask::kFull;
  prog.answer_length = g.outputs.size();
  prog.declared_budget = D;

  prog.word_embed.assign(S, std::vector<Raw>(m, 0));
  for (std::size_t a = 0; a < S; ++a) {
    prog.word_embed[a][at(0, o_value, a)] = one;
    for (std::size_t w = 1; w < W; ++w) prog.word_embed[a][at(w, o_value, pad)] = one;
  }

  // node occupying (position, block) at each layer
  std::vector<std::map<std::pair<std::size_t, std::size_t>, NodeId>> occupant(D + 1);
  for (std::size_t t = 0; t <= D; ++t) {
    for (auto v : ld.layers[t]) {
      const auto& pl = out.placement.at(v);
      occupant[t][{pl.position, pl.block}] = v;
    }
  }
  const auto idx = gx.index();

  prog.pos_embed.loops = D + 1;
  prog.pos_embed.positions = n;
  prog.pos_embed.rows.assign((D + 1) * n, std::vector<Raw>(m, 0));
  for (std::size_t t = 0; t <= D; ++t) {
    for (std::size_t i = 1; i <= n; ++i) {
      auto& row = prog.pos_embed.mutable_row(i, t);
      row[one_slot] = one;
      const auto bits = fxp::sbin(i, p);
      for (std::size_t b = 0; b < P; ++b) row[pos_r[b]] = bits[b] * one;
      for (std::size_t w = 0; w < W; ++w) {
        std::string label = graph::kHaltLabel;
        std::vector<NodeId> preds;
        if (t < D) {
          auto it = occupant[t + 1].find({i, w});
          if (it == occupant[t + 1].end()) {
            label = graph::kPadLabel;
          } else {
            const auto& node = gx.nodes[idx.at(it->second)];
            label = gx.label_of(node);
            preds = node.preds;
          }
        }
        row[at(w, o_label, label_index(label))] = one;
        for (std::size_t c = 0; c < C; ++c) {
          std::size_t target = 0;
          if (c < preds.size()) {
            const auto& pp = out.placement.at(preds[c]);
            target = pp.position;
            row[at(w, o_psel, c * W + pp.block)] = one;
          }
          const auto pb = fxp::sbin(target, p);
          for (std::size_t b = 0; b < P; ++b) row[at(w, o_ppos, c * P + b)] = pb[b] * one;
        }
      }
    }
  }

  // Layer 1: fetch, then select the predecessor's block.
  {
    tf::Layer layer;
    std::vector<tf::Triplet> merge;
    std::size_t col = 0;
    for (std::size_t w = 0; w < W; ++w) {
      for (std::size_t c = 0; c < C; ++c) {
        tf::MatrixBuilder q(2 * P, m), k(2 * P, m), v(W * S, m);
        for (std::size_t b = 0; b < P; ++b) {
          q.add(2 * b, at(w, o_ppos, c * P + b), one);
          q.add(2 * b + 1, one_slot, one);
          k.add(2 * b, pos_r[b], fxp::from_int(key_scale, fmt));
          k.add(2 * b + 1, one_slot, fxp::from_int(-key_scale, fmt));
        }
        for (std::size_t w2 = 0; w2 < W; ++w2) {
          for (std::size_t a = 0; a < S; ++a) {
            v.add(w2 * S + a, at(w2, o_value, a), one);
            merge.push_back({at(w, o_stage, (c * W + w2) * S + a), col++, one});
          }
        }
        layer.heads.push_back({q.build(), k.build(), v.build()});
      }
    }
    layer.merge = tf::Matrix::from_triplets(m, col, merge);
    gates::FFAssembler ff(m, fmt);
    for (std::size_t w = 0; w < W; ++w) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t w2 = 0; w2 < W; ++w2) {
          for (std::size_t a = 0; a < S; ++a) {
            const auto u = ff.add_unit({{at(w, o_stage, (c * W + w2) * S + a), 1}, {at(w, o_psel, c * W + w2), 1}}, -1);
            ff.add_output(u, at(w, o_scr, c * S + a), 1);
          }
        }
      }
    }
    layer.ff = ff.build();
    prog.layers.push_back(std::move(layer));
  }

  // Layer 2: label-gated lookup into the proposal.
  {
    tf::Layer layer;
    gates::FFAssembler ff(m, fmt);
    for (std::size_t w = 0; w < W; ++w) {
      for (std::size_t e = 0; e < F; ++e) {
        const auto& label = out.labels[e];
        const std::size_t lab = at(w, o_label, e);
        if (label == graph::kPadLabel) {
          ff.add_output(ff.add_unit({{lab, 1}}, 0), at(w, o_prop, pad), 1);
          continue;
        }
        if (label == graph::kHaltLabel) {
          for (std::size_t a = 0; a < S; ++a) {
            ff.add_output(ff.add_unit({{lab, 1}, {at(w, o_value, a), 1}}, -1), at(w, o_prop, a), 1);
          }
          continue;
        }
        const auto f = gx.function_for(label);
        std::size_t rows = 1;
        for (int c = 0; c < f.arity; ++c) rows *= sigma;
        for (std::size_t u = 0; u < rows; ++u) {
          std::vector<std::pair<std::size_t, std::int64_t>> in{{lab, 1}};
          std::size_t rest = u;
          for (int c = f.arity - 1; c >= 0; --c) {
            in.emplace_back(at(w, o_scr, static_cast<std::size_t>(c) * S + rest % sigma), 1);
            rest /= sigma;
          }
          const auto unit = ff.add_unit(in, -f.arity);
          ff.add_output(unit, at(w, o_prop, static_cast<std::size_t>(f.table[u])), 1);
        }
      }
    }
    layer.ff = ff.build();
    prog.layers.push_back(std::move(layer));
  }

  // Layer 3: one-hot commit and clearing.
  {
    tf::Layer layer;
    gates::FFAssembler ff(m, fmt);
    const auto thr = gates::onehot_threshold();
    const std::int64_t k_thr = K - thr.delta_num * (K >> thr.delta_bits);  // K(1 - delta)
    auto clear_nonneg = [&](std::size_t slot) { ff.add_output(ff.add_unit({{slot, 1}}, 0), slot, -1); };
    auto clear_signed = [&](std::size_t slot) {
      ff.add_output(ff.add_unit({{slot, 1}}, 0), slot, -1);
      ff.add_output(ff.add_unit({{slot, -1}}, 0), slot, 1);
    };
    clear_nonneg(one_slot);
    for (std::size_t b = 0; b < P; ++b) clear_signed(pos_r[b]);
    for (std::size_t w = 0; w < W; ++w) {
      for (std::size_t a = 0; a < S; ++a) {
        const std::size_t val = at(w, o_value, a);
        const std::size_t prop = at(w, o_prop, a);
        ff.add_output(ff.add_unit({{prop, K}}, -k_thr), val, 1);
        ff.add_output(ff.add_unit({{prop, K}}, -k_thr - 1), val, -1);
        clear_nonneg(val);
        clear_nonneg(prop);
      }
      for (std::size_t e = 0; e < F; ++e) clear_nonneg(at(w, o_label, e));
      for (std::size_t k = 0; k < C * P; ++k) clear_signed(at(w, o_ppos, k));
      for (std::size_t k = 0; k < C * W; ++k) clear_nonneg(at(w, o_psel, k));
      for (std::size_t k = 0; k < C * W * S; ++k) clear_nonneg(at(w, o_stage, k));
      for (std::size_t k = 0; k < C * S; ++k) clear_nonneg(at(w, o_scr, k));
    }
    layer.ff = ff.build();
    prog.layers.push_back(std::move(layer));
  }

  tf::MatrixBuilder gamma(S, m);
  for (std::size_t a = 0; a < S; ++a) gamma.add(a, at(0, o_value, a), one);
  prog.output_proj = gamma.build();

  prog.meta["nodes"] = static_cast<std::int64_t>(g.nodes.size());
  prog.meta["expanded_nodes"] = static_cast<std::int64_t>(gx.nodes.size());
  prog.meta["inputs"] = static_cast<std::int64_t>(n);
  prog.meta["outputs"] = static_cast<std::int64_t>(g.outputs.size());
  prog.meta["depth"] = static_cast<std::int64_t>(D);
  prog.meta["width"] = static_cast<std::int64_t>(W);
  prog.meta["parallel_space"] = static_cast<std::int64_t>(space);
  prog.meta["fan_in_cap"] = opts.fan_in_cap;
  prog.meta["position_bits"] = p;
  prog.validate();
  return out;
}

LoopReport verify_looped(const CompGraph& g, const LoopCompilation& c,
                         const std::vector<std::vector<graph::Symbol>>& inputs, bool audit) {
  LoopReport r;
  r.size = g.nodes.size();
  r.loops = c.program.declared_budget;
  r.expected_loops = loop_count(g);
  r.width = c.width;
  r.parallel_space = static_cast<std::size_t>(c.program.meta.at("parallel_space"));
  const auto& prog = c.program;
  const Raw one = prog.fmt.one();
  const std::size_t S = c.symbols.size();
  for (const auto& x : inputs) {
    ++r.samples;
    const auto expected = graph::evaluate(g, x);
    LoopMismatch mm{x, expected, {}, ""};
    bool audit_bad = false;
    try {
      const auto run = tf::run_looped(prog, x, r.expected_loops, audit);
      mm.got = run.answer;
      if (audit) {
        const auto values = graph::evaluate_all(c.expanded, x);
        for (std::size_t t = 1; t < c.layers.layers.size() && !audit_bad; ++t) {
          const auto& h = run.trace.snapshots.at(t - 1);
          for (auto v : c.layers.layers[t]) {
            const auto& pl = c.placement.at(v);
            const auto& row = h[pl.position - 1];
            for (std::size_t a = 0; a < S; ++a) {
              const Raw want = static_cast<std::size_t>(values.at(v)) == a ? one : 0;
              if (row[c.value_slot(pl, a)] != want) {
                audit_bad = true;
                if (!r.first_divergent_loop || *r.first_divergent_loop > t) r.first_divergent_loop = t;
                mm.note = "layer audit: node " + std::to_string(v) + " wrong after loop " + std::to_string(t);
                break;
              }
            }
            if (audit_bad) break;
          }
        }
      }
    } catch (const Error& e) {
      mm.note = e.what();
    }
    if (audit_bad) ++r.audit_failures;
    if (mm.got != expected || !mm.note.empty()) {
      ++r.mismatches;
      if (r.examples.size() < 8) r.examples.push_back(std::move(mm));
    }
  }
  r.pass = r.mismatches == 0 && r.audit_failures == 0 && r.loops == r.expected_loops;
  return r;
}

// ---- threshold circuits ----

const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::kAnd: return "AND";
    case GateKind::kOr: return "OR";
    case GateKind::kNot: return "NOT";
    case GateKind::kMaj: return "MAJ";
    case GateKind::kThreshold: return "THRESHOLD";
  }
  return "?";
}

GateKind parse_gate_kind(const std::string& s) {
  for (auto k : {GateKind::kAnd, GateKind::kOr, GateKind::kNot, GateKind::kMaj, GateKind::kThreshold}) {
    if (s == gate_kind_name(k)) return k;
  }
  throw Error(ErrorCode::kParse, "unknown gate kind '" + s + "'");
}

void ThresholdCircuit::validate() const {
  if (inputs < 1) throw Error(ErrorCode::kValidation, "circuit needs at least one input");
  std::set<std::int64_t> ids;
  for (const auto& gt : gates) {
    if (gt.id < inputs) {
      throw Error(ErrorCode::kValidation, "gate id " + std::to_string(gt.id) + " collides with input ids");
    }
    if (!ids.insert(gt.id).second) throw Error(ErrorCode::kValidation, "duplicate gate id " + std::to_string(gt.id));
  }
  for (const auto& gt : gates) {
    const auto gid = std::to_string(gt.id);
    if (gt.preds.empty()) throw Error(ErrorCode::kArity, "gate " + gid + " has no inputs");
    if (gt.kind == GateKind::kNot && gt.preds.size() != 1) {
      throw Error(ErrorCode::kArity, "NOT gate " + gid + " needs fan-in 1");
    }
    if (gt.kind == GateKind::kThreshold && (gt.k < 0 || gt.k > static_cast<int>(gt.preds.size()))) {
      throw Error(ErrorCode::kValidation, "THRESHOLD gate " + gid + " has k outside [0, fan-in]");
    }
    for (auto p : gt.preds) {
      if (p < 0 || (p >= inputs && !ids.count(p))) {
        throw Error(ErrorCode::kValidation, "gate " + gid + " references missing node " + std::to_string(p));
      }
    }
  }
  if (output < inputs) throw Error(ErrorCode::kValidation, "output is an input; add a gate");
  if (!ids.count(output)) throw Error(ErrorCode::kValidation, "output gate " + std::to_string(output) + " missing");
  if (topo_gates().size() != gates.size()) throw Error(ErrorCode::kCycle, "circuit has a cycle");
}

std::vector<std::size_t> ThresholdCircuit::topo_gates() const {
  std::map<std::int64_t, std::size_t> by_id;
  for (std::size_t i = 0; i < gates.size(); ++i) by_id[gates[i].id] = i;
  std::map<std::int64_t, int> pending;
  std::map<std::int64_t, std::vector<std::int64_t>> succ;
  for (const auto& gt : gates) {
    pending[gt.id] = 0;
    for (auto p : gt.preds) {
      if (p >= inputs && by_id.count(p)) {
        ++pending[gt.id];
        succ[p].push_back(gt.id);
      }
    }
  }
  std::set<std::int64_t> ready;
  for (const auto& [id, d] : pending) {
    if (d == 0) ready.insert(id);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const auto id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(by_id.at(id));
    for (auto s : succ[id]) {
      if (--pending[s] == 0) ready.insert(s);
    }
  }
  return order;
}

std::map<std::int64_t, int> ThresholdCircuit::depths() const {
  std::map<std::int64_t, int> d;
  for (int j = 0; j < inputs; ++j) d[j] = 0;
  for (auto gi : topo_gates()) {
    int best = 0;
    for (auto p : gates[gi].preds) best = std::max(best, d.at(p));
    d[gates[gi].id] = best + 1;
  }
  return d;
}

int ThresholdCircuit::depth() const { return depths().at(output); }

std::map<std::int64_t, int> ThresholdCircuit::evaluate_all(std::span<const int> bits) const {
  if (bits.size() != static_cast<std::size_t>(inputs)) {
    throw Error(ErrorCode::kInvalidArgument, "circuit expects " + std::to_string(inputs) + " input bits");
  }
  std::map<std::int64_t, int> val;
  for (int j = 0; j < inputs; ++j) {
    if (bits[static_cast<std::size_t>(j)] != 0 && bits[static_cast<std::size_t>(j)] != 1) {
      throw Error(ErrorCode::kOutOfRange, "circuit input is not a bit");
    }
    val[j] = bits[static_cast<std::size_t>(j)];
  }
  for (auto gi : topo_gates()) {
    const auto& gt = gates[gi];
    int ones = 0;
    for (auto p : gt.preds) ones += val.at(p);
    const int fan = static_cast<int>(gt.preds.size());
    int v = 0;
    switch (gt.kind) {
      case GateKind::kAnd: v = ones == fan; break;
      case GateKind::kOr: v = ones > 0; break;
      case GateKind::kNot: v = 1 - ones; break;
      case GateKind::kMaj: v = ones >= fan / 2 + 1; break;
      case GateKind::kThreshold: v = ones >= gt.k; break;
    }
    val[gt.id] = v;
  }
  return val;
}

int ThresholdCircuit::evaluate(std::span<const int> bits) const { return evaluate_all(bits).at(output); }

std::size_t loop_count(const ThresholdCircuit& c) {
  c.validate();
  return static_cast<std::size_t>(c.depth());
}

namespace {

gates::FFWeights gate_weights(const Gate& gt) {
  const int fan = static_cast<int>(gt.preds.size());
  switch (gt.kind) {
    case GateKind::kAnd: return gates::ff_and(fan);
    case GateKind::kOr: return gates::ff_or(fan);
    case GateKind::kNot: return gates::ff_not();
    case GateKind::kMaj: return gates::ff_majority(fan);
    case GateKind::kThreshold: return gates::ff_threshold(fan, gt.k);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown gate kind");
}

}  // namespace

CircuitCompilation compile_circuit_looped(const ThresholdCircuit& c, Precision precision) {
  c.validate();
  std::size_t max_fan = 1;
  for (const auto& gt : c.gates) {
    max_fan = std::max(max_fan, gt.preds.size());
    if (precision == Precision::kConstantBit &&
        (gt.kind == GateKind::kMaj || gt.kind == GateKind::kThreshold)) {
      throw Error(ErrorCode::kInvalidArgument, std::string(gate_kind_name(gt.kind)) + " gate " +
                                                   std::to_string(gt.id) +
                                                   " needs log-bit precision");
    }
  }
  const std::size_t n = static_cast<std::size_t>(c.inputs);
  CircuitCompilation out;
  out.depth = c.depth();
  for (std::size_t j = 0; j < n; ++j) out.node_order.push_back(static_cast<std::int64_t>(j));
  const auto topo = c.topo_gates();
  for (auto gi : topo) out.node_order.push_back(c.gates[gi].id);
  std::map<std::int64_t, std::size_t> node_index;
  for (std::size_t v = 0; v < out.node_order.size(); ++v) node_index[out.node_order[v]] = v;
  const std::size_t nv = out.node_order.size();

  auto& L = out.layout;
  L.add("x", 1);
  L.add("e", n);
  L.add("gates", 2 * nv);
  const auto& s_x = L.at("x");
  const auto& s_e = L.at("e");
  const auto& s_g = L.at("gates");
  const std::size_t m = L.dim();
  auto value_of = [&](std::size_t v) { return s_g[2 * v]; };
  auto const_of = [&](std::size_t v) { return s_g[2 * v + 1]; };

  const int frac = precision == Precision::kLogBit ? std::max(1, fxp::bits_for_magnitude(n)) : 1;
  const auto fmt = fxp::format_for(std::max(n, max_fan) + 2, frac);
  const Raw one = fmt.one();
  const std::size_t D = static_cast<std::size_t>(out.depth);

  auto& prog = out.program;
  prog.fmt = fmt;
  prog.embed_dim = m;
  prog.vocab = {"0", "1"};
  prog.mode = tf::Mode::kLooped;
  prog.mask = tf::Mask::kFull;
  prog.answer_length = 1;
  prog.declared_budget = D;

  prog.word_embed.assign(2, std::vector<Raw>(m, 0));
  prog.word_embed[1][s_x[0]] = one;

  prog.pos_embed.loops = D + 1;
  prog.pos_embed.positions = n;
  prog.pos_embed.rows.assign((D + 1) * n, std::vector<Raw>(m, 0));
  for (std::size_t i = 1; i <= n; ++i) {
    auto& row = prog.pos_embed.mutable_row(i, 0);
    row[s_e[i - 1]] = one;
    for (std::size_t v = 0; v < nv; ++v) row[const_of(v)] = one;
  }

  // Layer 1: e_k <- x * e_k.
  {
    tf::Layer layer;
    gates::FFAssembler ff(m, fmt);
    for (std::size_t k = 0; k < n; ++k) {
      ff.add_output(ff.add_unit({{s_x[0], 1}, {s_e[k], 1}}, -1), s_e[k], 1);
      ff.add_output(ff.add_unit({{s_e[k], 1}}, 0), s_e[k], -1);
    }
    layer.ff = ff.build();
    prog.layers.push_back(std::move(layer));
  }
  // Layer 2: uniform attention copies every input bit to every position.
  {
    tf::Layer layer;
    tf::MatrixBuilder q(1, m), k(1, m), v(n, m);
    q.add(0, const_of(0), one);
    k.add(0, const_of(0), one);
    std::vector<tf::Triplet> merge;
    for (std::size_t j = 0; j < n; ++j) {
      v.add(j, s_e[j], fxp::from_int(static_cast<std::int64_t>(n), fmt));
      v.add(j, value_of(j), -one);
      merge.push_back({value_of(j), j, one});
    }
    layer.heads.push_back({q.build(), k.build(), v.build()});
    layer.merge = tf::Matrix::from_triplets(m, n, merge);
    prog.layers.push_back(std::move(layer));
  }
  // Layer 3: gate bank.
  {
    tf::Layer layer;
    gates::FFAssembler ff(m, fmt);
    for (auto gi : topo) {
      const auto& gt = c.gates[gi];
      const auto w = gate_weights(gt);
      std::vector<std::size_t> in;
      for (auto p : gt.preds) {
        in.push_back(value_of(node_index.at(p)));
        in.push_back(const_of(node_index.at(p)));
      }
      const std::size_t target = value_of(node_index.at(gt.id));
      const std::vector<std::size_t> outs{target};
      ff.place(w, in, outs);
      ff.add_output(ff.add_unit({{target, 1}}, 0), target, -1);
    }
    layer.ff = ff.build();
    prog.layers.push_back(std::move(layer));
  }

  tf::MatrixBuilder gamma(2, m);
  const std::size_t o = value_of(node_index.at(c.output));
  gamma.add(0, const_of(0), one);
  gamma.add(0, o, -one);
  gamma.add(1, o, one);
  prog.output_proj = gamma.build();

  prog.meta["nodes"] = static_cast<std::int64_t>(nv);
  prog.meta["inputs"] = static_cast<std::int64_t>(n);
  prog.meta["gates"] = static_cast<std::int64_t>(c.gates.size());
  prog.meta["depth"] = out.depth;
  prog.meta["constant_bit"] = precision == Precision::kConstantBit ? 1 : 0;
  prog.validate();
  return out;
}

CircuitReport verify_circuit(const ThresholdCircuit& c, const CircuitCompilation& cc,
                             const std::vector<std::vector<int>>& inputs, bool audit) {
  CircuitReport r;
  r.size = cc.node_order.size();
  r.loops = cc.program.declared_budget;
  r.expected_loops = loop_count(c);
  const auto depth_of = c.depths();
  const auto& s_g = cc.layout.at("gates");
  const Raw one = cc.program.fmt.one();
  for (const auto& x : inputs) {
    ++r.samples;
    bool bad = false;
    bool audit_bad = false;
    try {
      const auto run = tf::run_looped(cc.program, x, r.expected_loops, audit);
      bad = run.answer.size() != 1 || run.answer[0] != c.evaluate(x);
      if (audit) {
        const auto values = c.evaluate_all(x);
        for (std::size_t t = 1; t <= run.trace.snapshots.size() && !audit_bad; ++t) {
          const auto& h = run.trace.snapshots[t - 1];
          for (std::size_t v = 0; v < cc.node_order.size() && !audit_bad; ++v) {
            const auto id = cc.node_order[v];
            if (static_cast<std::size_t>(depth_of.at(id)) > t) continue;
            const Raw want = values.at(id) * one;
            for (const auto& row : h) {
              if (row[s_g[2 * v]] != want) {
                audit_bad = true;
                if (!r.first_divergent_loop || *r.first_divergent_loop > t) r.first_divergent_loop = t;
                break;
              }
            }
          }
        }
      }
    } catch (const Error&) {
      bad = true;
    }
    if (audit_bad) ++r.audit_failures;
    if (bad || audit_bad) {
      ++r.mismatches;
      if (r.failing_inputs.size() < 8) r.failing_inputs.push_back(x);
    }
  }
  r.pass = r.mismatches == 0 && r.audit_failures == 0 && r.loops == r.expected_loops;
  return r;
}

std::vector<std::vector<int>> all_bit_vectors(int n) {
  if (n < 0 || n > 24) throw Error(ErrorCode::kCapExceeded, "all_bit_vectors: n outside [0, 24]");
  std::vector<std::vector<int>> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
    std::vector<int> bits(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) bits[static_cast<std::size_t>(j)] = static_cast<int>((v >> (n - 1 - j)) & 1U);
    out.push_back(std::move(bits));
  }
  return out;
}

}  // namespace cotloop::loop
