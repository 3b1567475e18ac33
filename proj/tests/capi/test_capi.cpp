// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Links only the shared library and its C header.

#include <gtest/gtest.h>

#include <cstring>
#include <string>

#include <json.hpp>

#include "cotloop/cotloop.h"

namespace {

const char* kGraph = R"({
  "alphabet": ["0", "1"],
  "functions": {"xor": {"arity": 2, "table": [0, 1, 1, 0]}},
  "nodes": [
    {"id": 0, "kind": "input"},
    {"id": 1, "kind": "input"},
    {"id": 2, "kind": "func", "fn": "xor", "preds": [0, 1]}
  ],
  "outputs": [2]
})";

std::string take(char* s) {
  std::string r = s ? s : "";
  cotloop_string_free(s);
  return r;
}

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_GT(std::strlen(cotloop_version()), 0u);
  EXPECT_STREQ(cotloop_status_name(COTLOOP_OK), "Ok");
  EXPECT_STREQ(cotloop_status_name(COTLOOP_E_CYCLE), "Cycle");
  EXPECT_STREQ(cotloop_status_name(COTLOOP_E_BUDGET_TOO_SMALL), "BudgetTooSmall");
}

TEST(CApi, GraphCompileRun) {
  cotloop_graph* g = nullptr;
  ASSERT_EQ(cotloop_graph_from_json(kGraph, &g), COTLOOP_OK) << cotloop_last_error();
  ASSERT_EQ(cotloop_graph_validate(g, 3), COTLOOP_OK);

  char* info = nullptr;
  ASSERT_EQ(cotloop_graph_info(g, &info), COTLOOP_OK);
  const auto j = nlohmann::json::parse(take(info));
  EXPECT_EQ(j["depth"], 1);
  EXPECT_EQ(j["steps"], 1);

  cotloop_program* p = nullptr;
  char* layout = nullptr;
  ASSERT_EQ(cotloop_compile_cot(g, 3, &p, &layout), COTLOOP_OK) << cotloop_last_error();
  EXPECT_FALSE(take(layout).empty());
  EXPECT_EQ(cotloop_program_budget(p), 1u);

  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const int sym[2] = {a, b};
      int want = -1;
      size_t len = 0;
      ASSERT_EQ(cotloop_graph_evaluate(g, sym, 2, &want, 1, &len), COTLOOP_OK);
      EXPECT_EQ(want, a ^ b);
      // Program vocabulary indices come from the program; map through JSON.
      char* pj = nullptr;
      ASSERT_EQ(cotloop_program_to_json(p, &pj), COTLOOP_OK);
      const auto prog = nlohmann::json::parse(take(pj));
      const auto& vocab = prog["vocab"];
      auto idx = [&](const std::string& s) {
        for (std::size_t i = 0; i < vocab.size(); ++i) {
          if (vocab[i] == s) return static_cast<int>(i);
        }
        return -1;
      };
      const int x[2] = {idx(std::to_string(a)), idx(std::to_string(b))};
      int out = -1;
      ASSERT_EQ(cotloop_program_run(p, x, 2, -1, &out, 1, &len), COTLOOP_OK) << cotloop_last_error();
      EXPECT_EQ(len, 1u);
      EXPECT_EQ(vocab[static_cast<std::size_t>(out)], std::to_string(a ^ b));
      EXPECT_EQ(cotloop_program_run(p, x, 2, 0, &out, 1, &len), COTLOOP_E_BUDGET_TOO_SMALL);
      EXPECT_NE(std::string(cotloop_last_error()).find("required 1"), std::string::npos);
    }
  }
  cotloop_program_free(p);
  cotloop_graph_free(g);
}

TEST(CApi, BufferTooSmall) {
  cotloop_graph* g = nullptr;
  ASSERT_EQ(cotloop_graph_from_json(kGraph, &g), COTLOOP_OK);
  const int x[2] = {1, 0};
  size_t len = 0;
  EXPECT_EQ(cotloop_graph_evaluate(g, x, 2, nullptr, 0, &len), COTLOOP_E_BUFFER_TOO_SMALL);
  EXPECT_EQ(len, 1u);
  cotloop_graph_free(g);
}

TEST(CApi, ErrorsSetLastError) {
  cotloop_graph* g = nullptr;
  EXPECT_EQ(cotloop_graph_from_json("{", &g), COTLOOP_E_PARSE);
  EXPECT_EQ(g, nullptr);
  EXPECT_GT(std::strlen(cotloop_last_error()), 0u);
  EXPECT_EQ(cotloop_graph_from_json(nullptr, &g), COTLOOP_E_INVALID_ARGUMENT);
}

TEST(CApi, RelationsAndSampling) {
  cotloop_relation* r = nullptr;
  ASSERT_EQ(cotloop_relation_parse("p cnf 2 1\n1 2 0\n", &r), COTLOOP_OK) << cotloop_last_error();
  uint64_t n = 0;
  ASSERT_EQ(cotloop_relation_brute_count(r, &n), COTLOOP_OK);
  EXPECT_EQ(n, 3u);
  auto cfg = cotloop_sampler_config_default();
  cfg.seed = 5;
  cfg.samples = 50;
  char* rep = nullptr;
  ASSERT_EQ(cotloop_sample(r, &cfg, &rep), COTLOOP_OK) << cotloop_last_error();
  const auto j = nlohmann::json::parse(take(rep));
  EXPECT_EQ(j["brute_count"], 3);
  double est = 0.0;
  cfg.alpha = 0.0;
  ASSERT_EQ(cotloop_count_estimate(r, &cfg, &est), COTLOOP_OK);
  EXPECT_DOUBLE_EQ(est, 3.0);
  cotloop_relation_free(r);
}

TEST(CApi, Command) {
  char* out = nullptr;
  ASSERT_EQ(cotloop_command("selfcheck", "{}", &out), COTLOOP_OK) << cotloop_last_error();
  const auto j = nlohmann::json::parse(take(out));
  EXPECT_EQ(j["pass"], true);
  EXPECT_EQ(cotloop_command("nope", "{}", &out), COTLOOP_E_INVALID_ARGUMENT);
}
