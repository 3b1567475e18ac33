// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "cotloop/errors.hpp"
#include "cotloop/gates.hpp"
#include "cotloop/rng.hpp"

namespace gates = cotloop::gates;
using cotloop::loop::GateKind;

namespace {

std::vector<int> bits_of(int mask, int n) {
  std::vector<int> b;
  for (int i = 0; i < n; ++i) b.push_back((mask >> i) & 1);
  return b;
}

std::int64_t eval1(const gates::FFWeights& w, const std::vector<int>& bits) {
  const auto out = gates::ff_eval(w, gates::with_constant_slots(bits));
  EXPECT_EQ(out.size(), 1u);
  return out.at(0);
}

}  // namespace

TEST(Gates, Examples) {
  EXPECT_EQ(eval1(gates::ff_and(4), {1, 1, 1, 1}), 1);
  EXPECT_EQ(eval1(gates::ff_or(4), {0, 0, 0, 0}), 0);
  EXPECT_EQ(eval1(gates::ff_not(), {1}), 0);
  EXPECT_EQ(eval1(gates::ff_not(), {0}), 1);
  EXPECT_EQ(eval1(gates::ff_majority(3), {1, 1, 0}), 1);
  for (int n = 1; n <= 5; ++n) {
    for (int m = 0; m < (1 << n); ++m) EXPECT_EQ(eval1(gates::ff_threshold(n, 0), bits_of(m, n)), 1);
  }
}

TEST(Gates, ExhaustiveAndOrMajUpToTen) {
  for (int n = 1; n <= 10; ++n) {
    const auto a = gates::ff_and(n), o = gates::ff_or(n), mj = gates::ff_majority(n);
    for (int m = 0; m < (1 << n); ++m) {
      const auto b = bits_of(m, n);
      ASSERT_EQ(eval1(a, b), oracle::gate_truth(GateKind::kAnd, b));
      ASSERT_EQ(eval1(o, b), oracle::gate_truth(GateKind::kOr, b));
      ASSERT_EQ(eval1(mj, b), oracle::gate_truth(GateKind::kMaj, b));
    }
  }
}

TEST(Gates, ExhaustiveThresholdAllK) {
  for (int n = 1; n <= 8; ++n) {  // n = 9, 10 in the acceptance suite
    EXPECT_THROW(gates::ff_threshold(n, n + 1), cotloop::Error);
    for (int k = 0; k <= n; ++k) {
      const auto t = gates::ff_threshold(n, k);
      for (int m = 0; m < (1 << n); ++m) {
        const auto b = bits_of(m, n);
        ASSERT_EQ(eval1(t, b), oracle::gate_truth(GateKind::kThreshold, b, k)) << n << " " << k << " " << m;
      }
    }
  }
}

TEST(Gates, FixedPointEvaluationAgrees) {
  const cotloop::fxp::FxFormat fmt{8, 3};
  const auto w = gates::ff_threshold(5, 3);
  for (int m = 0; m < 32; ++m) {
    const auto z = gates::with_constant_slots(bits_of(m, 5));
    std::vector<cotloop::fxp::Raw> zr;
    for (auto v : z) zr.push_back(cotloop::fxp::from_int(v, fmt));
    const auto out = gates::ff_eval_fx(w, zr, fmt);
    EXPECT_EQ(out.at(0), cotloop::fxp::from_int(gates::ff_eval(w, z).at(0), fmt));
  }
}

TEST(TableFunction, IdentityOnBits) {
  const cotloop::graph::LocalFunction id{1, {0, 1}};
  const auto w = gates::table_function(id, 2);
  for (int a : {0, 1}) {
    const std::vector<int> args{a};
    EXPECT_EQ(gates::ff_eval(w, gates::concat_onehots(args, 2)), gates::concat_onehots(args, 2));
  }
}

TEST(TableFunction, XorHasFourUnits) {
  const cotloop::graph::LocalFunction x{2, {0, 1, 1, 0}};
  const auto w = gates::table_function(x, 2);
  EXPECT_EQ(w.hidden(), 4u);
  for (int a : {0, 1}) {
    for (int b : {0, 1}) {
      const std::vector<int> args{a, b};
      const std::vector<int> want{a ^ b};
      EXPECT_EQ(gates::ff_eval(w, gates::concat_onehots(args, 2)), gates::concat_onehots(want, 2));
    }
  }
}

TEST(TableFunction, RandomTernaryOverFourSymbols) {
  auto rng = cotloop::make_rng(42, {});
  for (int trial = 0; trial < 5; ++trial) {
    cotloop::graph::LocalFunction f{3, {}};
    for (int i = 0; i < 64; ++i) f.table.push_back(static_cast<int>(cotloop::uniform_index(rng, 4)));
    const auto w = gates::table_function(f, 4);
    for (int i = 0; i < 64; ++i) {
      const std::vector<int> args{i / 16, (i / 4) % 4, i % 4};
      const std::vector<int> want{f.table[static_cast<std::size_t>(i)]};
      ASSERT_EQ(gates::ff_eval(w, gates::concat_onehots(args, 4)), gates::concat_onehots(want, 4));
    }
  }
}

TEST(TableFunction, ArityAboveCapRejected) {
  const cotloop::graph::LocalFunction f{4, std::vector<int>(16, 0)};
  EXPECT_THROW(gates::table_function(f, 2, 3), cotloop::Error);
}

TEST(OneHot, Examples) {
  const cotloop::fxp::FxFormat fmt{8, 4};
  const auto t = gates::onehot_threshold(1, 2);  // delta = 1/4
  auto raw = [&](double v) { return static_cast<cotloop::fxp::Raw>(v * 16); };
  const std::vector<cotloop::fxp::Raw> exact{raw(1), 0, 0};
  EXPECT_EQ(t.apply(exact, fmt), (std::vector<cotloop::fxp::Raw>{16, 0, 0}));
  const std::vector<cotloop::fxp::Raw> soft{raw(0.9375), raw(0.5), raw(0.125)};
  EXPECT_EQ(t.apply(soft, fmt), (std::vector<cotloop::fxp::Raw>{16, 0, 0}));
  const std::vector<cotloop::fxp::Raw> mid{raw(0.5), raw(0.5)};
  try {
    t.apply(mid, fmt);
    FAIL();
  } catch (const cotloop::Error& e) {
    EXPECT_EQ(e.code(), cotloop::ErrorCode::kMarginViolated);
  }
  EXPECT_THROW(gates::check_margin(mid, fmt, t), cotloop::Error);
  EXPECT_EQ(gates::check_margin(soft, fmt, t), 0u);
}
