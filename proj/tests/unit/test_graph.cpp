// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "../oracles.hpp"
#include "../test_util.hpp"
#include "cotloop/corpus.hpp"
#include "cotloop/errors.hpp"
#include "cotloop/graph.hpp"
#include "cotloop/rng.hpp"

namespace graph = cotloop::graph;
using namespace testutil;

namespace {

bool has_code(const std::vector<graph::Diagnostic>& d, const std::string& code) {
  return std::any_of(d.begin(), d.end(), [&](const auto& x) { return x.code == code; });
}

}  // namespace

TEST(Validate, EmptyGraphIsValid) {
  graph::CompGraph g;
  g.alphabet = {"0"};
  EXPECT_TRUE(graph::validate(g).empty());
}

TEST(Validate, TwoCycle) {
  auto g = boolean_graph();
  input(g, 0);
  func(g, 1, "xor", {0, 2});
  func(g, 2, "xor", {0, 1});
  func(g, 3, "not", {2});
  g.outputs = {3};
  const auto d = graph::validate(g);
  EXPECT_TRUE(has_code(d, "cycle"));
  try {
    graph::require_valid(g);
    FAIL();
  } catch (const cotloop::Error& e) {
    EXPECT_EQ(e.code(), cotloop::ErrorCode::kCycle);
  }
}

TEST(Validate, ArityMismatch) {
  auto g = boolean_graph();
  for (int i = 0; i < 3; ++i) input(g, i);
  func(g, 3, "xor", {0, 1, 2});
  g.outputs = {3};
  EXPECT_TRUE(has_code(graph::validate(g), "arity mismatch"));
}

TEST(Validate, FanInCapAndUnknowns) {
  auto g = boolean_graph();
  g.functions["and4"] = {4, std::vector<int>(16, 0)};
  for (int i = 0; i < 4; ++i) input(g, i);
  func(g, 4, "and4", {0, 1, 2, 3});
  func(g, 5, "nope", {4});
  func(g, 6, "not", {99});
  g.outputs = {5, 6};
  const auto d = graph::validate(g);
  EXPECT_TRUE(has_code(d, "fan-in exceeds cap"));
  EXPECT_TRUE(has_code(d, "unknown function"));
  EXPECT_TRUE(has_code(d, "unknown node"));
  graph::ValidationOptions wide;
  wide.fan_in_cap = 4;
  EXPECT_FALSE(has_code(graph::validate(g, wide), "fan-in exceeds cap"));
}

TEST(Validate, BadTable) {
  auto g = boolean_graph();
  g.functions["bad"] = {2, {0, 1, 2}};
  input(g, 0);
  func(g, 1, "not", {0});
  g.outputs = {1};
  const auto d = graph::validate(g);
  EXPECT_TRUE(has_code(d, "table size"));
}

TEST(Validate, OutputWithSuccessor) {
  auto g = not_chain(2);
  g.outputs = {1, 2};
  EXPECT_TRUE(has_code(graph::validate(g), "output has successors"));
}

TEST(TopoOrder, Chain) {
  const auto g = not_chain(2);
  EXPECT_EQ(graph::topo_order(g), (std::vector<graph::NodeId>{0, 1, 2}));
}

TEST(TopoOrder, DiamondTieBreakById) {
  EXPECT_EQ(graph::topo_order(diamond()), (std::vector<graph::NodeId>{0, 1, 2, 3}));
}

TEST(TopoOrder, InputsOnly) {
  auto g = boolean_graph();
  for (int i : {4, 2, 9}) input(g, i);
  g.outputs = {2, 4, 9};
  EXPECT_EQ(graph::topo_order(g), (std::vector<graph::NodeId>{2, 4, 9}));
}

TEST(TopoOrder, RespectsEdgesOnCorpus) {
  for (const auto& g : cotloop::corpus::graph_corpus(5, 40)) {
    const auto order = graph::topo_order(g);
    ASSERT_EQ(order.size(), g.nodes.size());
    std::map<graph::NodeId, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (const auto& n : g.nodes) {
      for (auto p : n.preds) EXPECT_LT(pos.at(p), pos.at(n.id));
    }
  }
}

TEST(Layerize, Examples) {
  auto g = boolean_graph();
  input(g, 0);
  g.outputs = {0};
  const auto single = graph::layerize(g);
  EXPECT_EQ(single.depth(), 0);
  EXPECT_EQ(single.layers.at(0), (std::vector<graph::NodeId>{0}));
  for (int k = 1; k <= 7; ++k) EXPECT_EQ(graph::layerize(not_chain(k)).depth(), k);
  EXPECT_EQ(graph::layerize(diamond()).depth(), 2);
}

TEST(Layerize, DepthMatchesRecursiveOracle) {
  for (const auto& g : cotloop::corpus::graph_corpus(9, 60)) {
    EXPECT_EQ(graph::layerize(g).depth(), oracle::depth(g));
  }
}

TEST(StrictExpansion, StrictGraphUnchanged) {
  const auto g = not_chain(4);
  const auto x = graph::strict_layered_expansion(g);
  EXPECT_EQ(x.nodes.size(), g.nodes.size());
}

TEST(StrictExpansion, GapOfThreeInsertsTwo) {
  auto g = boolean_graph();
  input(g, 0);
  input(g, 1);
  func(g, 2, "not", {0});
  func(g, 3, "not", {2});
  func(g, 4, "xor", {3, 1});  // edge 1 -> 4 spans depth 0 -> 3
  g.outputs = {4};
  const auto x = graph::strict_layered_expansion(g);
  EXPECT_EQ(x.nodes.size(), g.nodes.size() + 2);
  const auto ld = graph::layerize(x);
  EXPECT_EQ(ld.depth(), 3);
  for (const auto& n : x.nodes) {
    for (auto p : n.preds) EXPECT_EQ(ld.depth_of.at(n.id), ld.depth_of.at(p) + 1);
  }
}

TEST(StrictExpansion, PreservesFunctionOnCorpus) {
  auto rng = cotloop::make_rng(3, {1});
  for (const auto& g : cotloop::corpus::graph_corpus(11, 40)) {
    const auto x = graph::strict_layered_expansion(g);
    EXPECT_EQ(graph::layerize(x).depth(), graph::layerize(g).depth());
    for (const auto& in : cotloop::corpus::random_inputs(rng, g, 8)) {
      EXPECT_EQ(oracle::evaluate(x, in), oracle::evaluate(g, in));
    }
  }
}

TEST(ParallelSpace, Examples) {
  EXPECT_EQ(graph::parallel_space(not_chain(5)), 1u);
  EXPECT_EQ(graph::parallel_space(diamond()), 2u);
  auto g = boolean_graph();
  for (int i = 0; i < 3; ++i) input(g, i);
  func(g, 3, "maj", {0, 1, 2});
  g.outputs = {3};
  EXPECT_EQ(graph::parallel_space(g), 3u);
}

TEST(Evaluate, Examples) {
  auto g = not_chain(2);
  EXPECT_EQ(graph::evaluate(g, std::vector<int>{1}), (std::vector<int>{1}));
  auto x = xor_chain(2);
  EXPECT_EQ(graph::evaluate(x, std::vector<int>{1, 0}), (std::vector<int>{1}));
  EXPECT_THROW(graph::evaluate(x, std::vector<int>{1}), cotloop::Error);
}

TEST(Evaluate, MatchesRecursiveOracleOnCorpus) {
  auto rng = cotloop::make_rng(7, {2});
  std::size_t checked = 0;
  for (const auto& g : cotloop::corpus::graph_corpus(13, 100)) {
    for (const auto& in : cotloop::corpus::random_inputs(rng, g, 16)) {
      ASSERT_EQ(graph::evaluate(g, in), oracle::evaluate(g, in));
      ++checked;
    }
  }
  EXPECT_EQ(checked, 1600u);
}

TEST(Corpus, RespectsBounds) {
  for (const auto& g : cotloop::corpus::graph_corpus(17, 200)) {
    EXPECT_TRUE(graph::validate(g).empty());
    EXPECT_LE(g.num_inputs(), 12u);
    EXPECT_LE(g.nodes.size(), 48u);
    EXPECT_LE(g.alphabet.size(), 4u);
    for (const auto& n : g.nodes) EXPECT_LE(n.preds.size(), 3u);
  }
}
