// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "../test_util.hpp"
#include "cotloop/corpus.hpp"
#include "cotloop/cot_compiler.hpp"
#include "cotloop/errors.hpp"
#include "cotloop/loop_compiler.hpp"
#include "cotloop/rng.hpp"

namespace cot = cotloop::cot;
namespace loop = cotloop::loop;
namespace tf = cotloop::tf;
using namespace testutil;

namespace {

std::vector<int> tokens(const tf::TransformerProgram& p, const std::vector<int>& symbols,
                        const cotloop::graph::CompGraph& g) {
  std::vector<int> out;
  for (int s : symbols) out.push_back(tf::vocab_index(p, g.alphabet.at(static_cast<std::size_t>(s))));
  return out;
}

std::vector<int> symbols(const tf::TransformerProgram& p, const std::vector<int>& toks,
                         const cotloop::graph::CompGraph& g) {
  std::vector<int> out;
  for (int t : toks) out.push_back(cotloop::graph::symbol_index(g, p.vocab.at(static_cast<std::size_t>(t))));
  return out;
}

loop::ThresholdCircuit single_gate(loop::GateKind kind, int n, int k = 0) {
  loop::ThresholdCircuit c;
  c.inputs = n;
  loop::Gate g;
  g.id = n;
  g.kind = kind;
  g.k = k;
  for (int i = 0; i < n; ++i) g.preds.push_back(i);
  c.gates.push_back(g);
  c.output = n;
  return c;
}

}  // namespace

TEST(CompileCot, SingleIdentityNode) {
  auto g = boolean_graph();
  input(g, 0);
  func(g, 1, "__id", {0});
  g.outputs = {1};
  const auto c = cot::compile_cot(g);
  EXPECT_EQ(c.program.declared_budget, 1u);
  for (int b : {0, 1}) {
    const auto r = tf::run_cot(c.program, tokens(c.program, {b}, g), 1);
    EXPECT_EQ(symbols(c.program, r.answer, g), (std::vector<int>{b}));
  }
}

TEST(CompileCot, XorChainTrace) {
  // inputs (1, 1, 0): x0^x1 = 0, then ^x2 = 0, then the output marker copies it
  auto g = boolean_graph();
  for (int i = 0; i < 3; ++i) input(g, i);
  func(g, 3, "xor", {0, 1});
  func(g, 4, "xor", {3, 2});
  g.nodes.push_back({5, cotloop::graph::NodeKind::kOutput, "", {4}});
  g.outputs = {5};
  const auto c = cot::compile_cot(g);
  ASSERT_EQ(c.program.declared_budget, 3u);
  const auto r = tf::run_cot(c.program, tokens(c.program, {1, 1, 0}, g), 3);
  EXPECT_EQ(symbols(c.program, r.trace.tokens, g), (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(symbols(c.program, r.answer, g), (std::vector<int>{0}));
}

TEST(CompileCot, StepCount) {
  auto g = boolean_graph();
  for (int i = 0; i < 3; ++i) input(g, i);
  g.outputs = {0, 1, 2};
  EXPECT_EQ(cot::cot_step_count(g), 0u);
  auto h = boolean_graph();
  for (int i = 0; i < 4; ++i) input(h, i);
  for (int i = 4; i < 10; ++i) func(h, i, "xor", {i - 4, i - 3});
  h.outputs = {9};
  // nodes 4..8 feed later nodes only if consumed; make every extra node an output
  h.outputs = {4, 5, 6, 7, 8, 9};
  h.nodes[4].preds = {0, 1};
  h.nodes[5].preds = {1, 2};
  h.nodes[6].preds = {2, 3};
  h.nodes[7].preds = {0, 3};
  h.nodes[8].preds = {0, 2};
  h.nodes[9].preds = {1, 3};
  EXPECT_TRUE(cotloop::graph::validate(h).empty());
  EXPECT_EQ(h.nodes.size(), 10u);
  EXPECT_EQ(cot::cot_step_count(h), 6u);
}

TEST(CompileCot, CorpusSliceMatchesOracle) {
  auto rng = cotloop::make_rng(21, {});
  for (const auto& g : cotloop::corpus::graph_corpus(101, 25)) {
    const auto c = cot::compile_cot(g);
    const auto ins = cotloop::corpus::random_inputs(rng, g, 16);
    for (const auto& x : ins) {
      const auto r = tf::run_cot(c.program, tokens(c.program, x, g), cot::cot_step_count(g));
      ASSERT_EQ(symbols(c.program, r.answer, g), oracle::evaluate(g, x));
    }
    const auto rep = cot::verify_cot(g, c, ins);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.steps, cot::cot_step_count(g));
    EXPECT_EQ(rep.steps, g.nodes.size() - g.num_inputs());
  }
}

TEST(CompileCot, CorruptedExpertReported) {
  auto g = xor_chain(4);
  auto c = cot::compile_cot(g);
  // Flip the sign of every second-layer weight of the first MoE expert we find.
  bool touched = false;
  for (auto& layer : c.program.layers) {
    if (auto* moe = std::get_if<tf::MoEFF>(&layer.ff)) {
      for (auto& e : moe->experts) {
        if (e.w2.nnz() == 0) continue;
        for (const auto& t : e.w2.triplets()) e.w2 = e.w2.with_entry(t.row, t.col, -t.value);
        touched = true;
      }
    }
  }
  ASSERT_TRUE(touched);
  const auto rep = cot::verify_cot(g, c, loop::all_bit_vectors(4));
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.mismatches + rep.trace_mismatches, 0u);
}

TEST(CompileCot, FanInCapEnforced) {
  auto g = boolean_graph();
  for (int i = 0; i < 3; ++i) input(g, i);
  func(g, 3, "maj", {0, 1, 2});
  g.outputs = {3};
  cot::CotOptions o;
  o.fan_in_cap = 2;
  EXPECT_THROW(cot::compile_cot(g, o), cotloop::Error);
  EXPECT_NO_THROW(cot::compile_cot(g));
}

TEST(CompileLooped, DepthZeroIsIdentity) {
  auto g = boolean_graph();
  input(g, 0);
  input(g, 1);
  g.outputs = {0, 1};
  const auto c = loop::compile_looped(g);
  EXPECT_EQ(c.program.declared_budget, 0u);
  EXPECT_EQ(loop::loop_count(g), 0u);
  const auto r = tf::run_looped(c.program, tokens(c.program, {1, 0}, g), 0);
  EXPECT_EQ(symbols(c.program, r.answer, g), (std::vector<int>{1, 0}));
}

TEST(CompileLooped, DiamondTwoLoops) {
  const auto g = diamond();
  const auto c = loop::compile_looped(g);
  EXPECT_EQ(c.program.declared_budget, 2u);
  const auto rep = loop::verify_looped(g, c, {{0}, {1}});
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.loops, 2u);
}

TEST(CompileLooped, LoopCountOfChain) {
  EXPECT_EQ(loop::loop_count(not_chain(7)), 7u);
  auto g = boolean_graph();
  input(g, 0);
  g.outputs = {0};
  EXPECT_EQ(loop::loop_count(g), 0u);
}

TEST(CompileLooped, CorpusSliceMatchesOracle) {
  auto rng = cotloop::make_rng(22, {});
  for (const auto& g : cotloop::corpus::graph_corpus(202, 25)) {
    const auto c = loop::compile_looped(g);
    const auto ins = cotloop::corpus::random_inputs(rng, g, 8);
    for (const auto& x : ins) {
      const auto r = tf::run_looped(c.program, tokens(c.program, x, g), loop::loop_count(g), false);
      ASSERT_EQ(symbols(c.program, r.answer, g), oracle::evaluate(g, x));
    }
    const auto rep = loop::verify_looped(g, c, ins);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.loops, static_cast<std::size_t>(oracle::depth(cotloop::graph::strict_layered_expansion(g))));
  }
}

TEST(CompileLooped, CorruptedPositionalRowPinpointed) {
  const auto g = not_chain(4);
  auto c = loop::compile_looped(g);
  // Zero every positional row used at loop index 2.
  for (std::size_t pos = 1; pos <= c.program.pos_embed.positions; ++pos) {
    auto& row = c.program.pos_embed.mutable_row(pos, 2);
    std::fill(row.begin(), row.end(), 0);
  }
  const auto rep = loop::verify_looped(g, c, {{0}, {1}});
  EXPECT_FALSE(rep.pass);
  ASSERT_TRUE(rep.first_divergent_loop.has_value());
  EXPECT_EQ(*rep.first_divergent_loop, 3u);  // 1-based loop count
}

TEST(CompileCircuit, SingleAndGate) {
  const auto c = single_gate(loop::GateKind::kAnd, 3);
  for (auto prec : {loop::Precision::kLogBit, loop::Precision::kConstantBit}) {
    const auto cc = loop::compile_circuit_looped(c, prec);
    EXPECT_EQ(cc.program.declared_budget, 1u);
    const auto rep = loop::verify_circuit(c, cc, loop::all_bit_vectors(3));
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.samples, 8u);
  }
}

TEST(CompileCircuit, NotChainDepthFour) {
  loop::ThresholdCircuit c;
  c.inputs = 1;
  for (int i = 1; i <= 4; ++i) c.gates.push_back({i, loop::GateKind::kNot, 0, {i - 1}});
  c.output = 4;
  const auto cc = loop::compile_circuit_looped(c, loop::Precision::kConstantBit);
  EXPECT_EQ(loop::loop_count(c), 4u);
  for (int b : {0, 1}) {
    const auto r = tf::run_program(cc.program, std::vector<int>{tf::vocab_index(cc.program, std::to_string(b))});
    EXPECT_EQ(cc.program.vocab[r.answer.at(0)], std::to_string(b));  // four negations
  }
}

TEST(CompileCircuit, MajorityNeedsLogBit) {
  const auto c = single_gate(loop::GateKind::kMaj, 3);
  EXPECT_THROW(loop::compile_circuit_looped(c, loop::Precision::kConstantBit), cotloop::Error);
  const auto cc = loop::compile_circuit_looped(c, loop::Precision::kLogBit);
  EXPECT_TRUE(loop::verify_circuit(c, cc, loop::all_bit_vectors(3)).pass);
}

TEST(CompileCircuit, RandomDepthThreeEightInputs) {
  cotloop::corpus::CircuitOptions o;
  o.min_inputs = 8;
  o.max_inputs = 8;
  o.max_depth = 3;
  auto rng = cotloop::make_rng(31, {});
  for (int t = 0; t < 5; ++t) {
    const auto c = cotloop::corpus::random_circuit(rng, o);
    const auto cc = loop::compile_circuit_looped(c);
    const auto all = loop::all_bit_vectors(8);
    ASSERT_EQ(all.size(), 256u);
    const auto rep = loop::verify_circuit(c, cc, all);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.loops, static_cast<std::size_t>(oracle::circuit_depth(c)));
    for (const auto& x : all) {
      const auto r = tf::run_program(cc.program, [&] {
        std::vector<int> t;
        for (int b : x) t.push_back(tf::vocab_index(cc.program, std::to_string(b)));
        return t;
      }());
      ASSERT_EQ(cc.program.vocab[r.answer.at(0)], std::to_string(oracle::circuit_eval(c, x)));
    }
  }
}

TEST(Circuit, EvaluateMatchesOracle) {
  for (const auto& c : cotloop::corpus::circuit_corpus(5, 30)) {
    EXPECT_EQ(c.depth(), oracle::circuit_depth(c));
    for (const auto& x : loop::all_bit_vectors(c.inputs)) ASSERT_EQ(c.evaluate(x), oracle::circuit_eval(c, x));
  }
}

TEST(Circuit, ValidationErrors) {
  loop::ThresholdCircuit c;
  c.inputs = 2;
  c.gates.push_back({2, loop::GateKind::kNot, 0, {0, 1}});
  c.output = 2;
  EXPECT_THROW(c.validate(), cotloop::Error);
  c.gates[0] = {2, loop::GateKind::kAnd, 0, {0, 3}};
  c.gates.push_back({3, loop::GateKind::kOr, 0, {2, 1}});
  c.output = 3;
  EXPECT_THROW(c.validate(), cotloop::Error);  // cycle 2 <-> 3
}
