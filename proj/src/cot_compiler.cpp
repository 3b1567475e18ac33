// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/cot_compiler.hpp"

#include <algorithm>
#include <set>

#include "cotloop/errors.hpp"
#include "cotloop/fxp.hpp"
#include "cotloop/gates.hpp"

namespace cotloop::cot {

using graph::CompGraph;
using graph::NodeId;
using graph::NodeKind;
using tf::Raw;

std::size_t cot_step_count(const CompGraph& g) { return g.nodes.size() - g.num_inputs(); }

namespace {

int bits_for_index(std::size_t max_index) {
  return std::max(1, fxp::bits_for_magnitude(max_index));
}

}  // namespace

CotCompilation compile_cot(const CompGraph& g, const CotOptions& opts) {
  graph::ValidationOptions vo;
  vo.fan_in_cap = opts.fan_in_cap;
  vo.node_cap = opts.node_cap;
  graph::require_valid(g, vo);
  if (g.num_inputs() == 0) throw Error(ErrorCode::kInvalidArgument, "compile_cot: graph has no inputs");

  const std::size_t N = g.nodes.size();
  const std::size_t sigma = g.alphabet.size();
  const std::size_t C = static_cast<std::size_t>(opts.fan_in_cap);
  const auto idx = g.index();

  CotCompilation out;
  out.order = graph::topo_order(g);
  std::map<NodeId, std::size_t> position_of;  // 1-based
  for (std::size_t i = 0; i < N; ++i) position_of[out.order[i]] = i + 1;

  // Labels actually evaluated, sorted, then the halt label.
  std::set<std::string> used;
  for (const auto& n : g.nodes) {
    if (n.kind != NodeKind::kInput) used.insert(g.label_of(n));
  }
  out.labels.assign(used.begin(), used.end());
  out.labels.push_back(graph::kHaltLabel);
  const std::size_t F = out.labels.size();
  auto label_index = [&](const std::string& l) {
    return static_cast<std::size_t>(std::find(out.labels.begin(), out.labels.end(), l) - out.labels.begin());
  };

  // Position 0 is never a key, so index 0 marks an unused predecessor.
  const int p = bits_for_index(N);
  out.position_bits = p;

  Layout& L = out.layout;
  L.add("value", sigma);
  L.add("label", F);
  L.add("one", 1);
  L.add("position", static_cast<std::size_t>(p));
  L.add("pred", C * static_cast<std::size_t>(p));
  L.add("scratch", C * sigma);
  const auto& s_val = L.at("value");
  const auto& s_lab = L.at("label");
  const auto& s_one = L.at("one");
  const auto& s_pos = L.at("position");
  const auto& s_pred = L.at("pred");
  const auto& s_scr = L.at("scratch");
  const std::size_t m = L.dim();

  const std::int64_t key_scale = std::int64_t{1} << (p + 1);
  const std::uint64_t max_mag = std::max<std::uint64_t>(
      {static_cast<std::uint64_t>(2 * p) * static_cast<std::uint64_t>(key_scale), C + 1, sigma + 1});
  const auto fmt = fxp::format_for(max_mag, p);
  const Raw one = fmt.one();

  auto& prog = out.program;
  prog.fmt = fmt;
  prog.embed_dim = m;
  prog.vocab = g.alphabet;
  prog.mode = tf::Mode::kCot;
  prog.mask = tf::Mask::kCausal;
  prog.answer_length = g.outputs.size();
  prog.declared_budget = cot_step_count(g);

  prog.word_embed.assign(sigma, std::vector<Raw>(m, 0));
  for (std::size_t a = 0; a < sigma; ++a) prog.word_embed[a][s_val[a]] = one;

  prog.pos_embed.loops = 1;
  prog.pos_embed.positions = N;
  prog.pos_embed.rows.assign(N, std::vector<Raw>(m, 0));
  for (std::size_t i = 1; i <= N; ++i) {
    auto& row = prog.pos_embed.mutable_row(i, 0);
    row[s_one[0]] = one;
    const auto pos_bits = fxp::sbin(i, p);
    for (int t = 0; t < p; ++t) row[s_pos[static_cast<std::size_t>(t)]] = pos_bits[static_cast<std::size_t>(t)] * one;
    std::string next_label = graph::kHaltLabel;
    std::vector<NodeId> preds;
    if (i < N) {
      const auto& next = g.nodes[idx.at(out.order[i])];
      next_label = g.label_of(next);
      preds = next.preds;
    }
    row[s_lab[label_index(next_label)]] = one;
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t target = c < preds.size() ? position_of.at(preds[c]) : 0;
      const auto bits = fxp::sbin(target, p);
      for (int t = 0; t < p; ++t) {
        row[s_pred[c * static_cast<std::size_t>(p) + static_cast<std::size_t>(t)]] =
            bits[static_cast<std::size_t>(t)] * one;
      }
    }
  }

  tf::Layer layer;
  std::vector<tf::Triplet> merge;
  for (std::size_t c = 0; c < C; ++c) {
    tf::MatrixBuilder q(2 * static_cast<std::size_t>(p), m), k(2 * static_cast<std::size_t>(p), m), v(sigma, m);
    for (std::size_t t = 0; t < static_cast<std::size_t>(p); ++t) {
      q.add(2 * t, s_pred[c * static_cast<std::size_t>(p) + t], one);
      q.add(2 * t + 1, s_one[0], one);
      k.add(2 * t, s_pos[t], fxp::from_int(key_scale, fmt));
      k.add(2 * t + 1, s_one[0], fxp::from_int(-key_scale, fmt));
    }
    for (std::size_t a = 0; a < sigma; ++a) {
      v.add(a, s_val[a], one);
      merge.push_back({s_scr[c * sigma + a], c * sigma + a, one});
    }
    layer.heads.push_back({q.build(), k.build(), v.build()});
  }
  layer.merge = tf::Matrix::from_triplets(m, C * sigma, merge);

  tf::MoEFF moe;
  tf::MatrixBuilder gate(F, m);
  for (std::size_t e = 0; e < F; ++e) {
    gate.add(e, s_lab[e], one);
    gates::FFAssembler expert(m, fmt);
    if (out.labels[e] != graph::kHaltLabel) {
      const auto f = g.function_for(out.labels[e]);
      const auto tw = gates::table_function(f, sigma, opts.fan_in_cap);
      std::vector<std::size_t> in_slots, out_slots;
      for (std::size_t c = 0; c < static_cast<std::size_t>(f.arity); ++c) {
        for (std::size_t a = 0; a < sigma; ++a) in_slots.push_back(s_scr[c * sigma + a]);
      }
      for (std::size_t a = 0; a < sigma; ++a) out_slots.push_back(s_val[a]);
      expert.place(tw, in_slots, out_slots);
      // Remove the current token so the value slot holds the new one-hot.
      for (std::size_t a = 0; a < sigma; ++a) {
        const auto u = expert.add_unit({{s_val[a], 1}}, 0);
        expert.add_output(u, s_val[a], -1);
      }
    }
    moe.experts.push_back(expert.build());
  }
  moe.gate = gate.build();
  layer.ff = std::move(moe);
  prog.layers.push_back(std::move(layer));

  tf::MatrixBuilder gamma(sigma, m);
  for (std::size_t a = 0; a < sigma; ++a) gamma.add(a, s_val[a], one);
  prog.output_proj = gamma.build();

  prog.meta["nodes"] = static_cast<std::int64_t>(N);
  prog.meta["inputs"] = static_cast<std::int64_t>(g.num_inputs());
  prog.meta["outputs"] = static_cast<std::int64_t>(g.outputs.size());
  prog.meta["depth"] = graph::layerize(g).depth();
  prog.meta["fan_in_cap"] = opts.fan_in_cap;
  prog.meta["position_bits"] = p;
  prog.validate();
  return out;
}

CotReport verify_cot(const CompGraph& g, const CotCompilation& c,
                     const std::vector<std::vector<graph::Symbol>>& inputs) {
  CotReport r;
  r.size = g.nodes.size();
  r.depth = graph::layerize(g).depth();
  r.expected_steps = cot_step_count(g);
  r.steps = c.program.declared_budget;
  const std::size_t n = g.num_inputs();
  for (const auto& x : inputs) {
    ++r.samples;
    const auto expected = graph::evaluate(g, x);
    CotMismatch mm{x, expected, {}, ""};
    try {
      const auto run = tf::run_cot(c.program, x, r.expected_steps);
      mm.got = run.answer;
      if (run.trace.tokens.size() != r.expected_steps) mm.note = "trace length differs from step count";
      const auto values = graph::evaluate_all(g, x);
      std::size_t bad = 0;
      for (std::size_t k = 0; k < run.trace.tokens.size() && n + k < c.order.size(); ++k) {
        if (run.trace.tokens[k] != values.at(c.order[n + k])) ++bad;
      }
      if (bad > 0) {
        ++r.trace_mismatches;
        if (mm.note.empty()) mm.note = std::to_string(bad) + " decoded tokens differ from node values";
      }
    } catch (const Error& e) {
      mm.note = e.what();
    }
    if (mm.got != expected || !mm.note.empty()) {
      ++r.mismatches;
      if (r.examples.size() < 8) r.examples.push_back(std::move(mm));
    }
  }
  r.pass = r.mismatches == 0 && r.trace_mismatches == 0 && r.steps == r.expected_steps;
  return r;
}

}  // namespace cotloop::cot
