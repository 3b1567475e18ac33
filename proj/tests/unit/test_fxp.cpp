// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cotloop/errors.hpp"
#include "cotloop/fxp.hpp"

namespace fxp = cotloop::fxp;
using cotloop::Error;
using cotloop::ErrorCode;

namespace {

fxp::FxFormat fmt(int i, int f) { return {i, f}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

}  // namespace

TEST(Quantize, ZeroIsZero) {
  EXPECT_EQ(fxp::quantize(0, 1, fmt(4, 0)).raw(), 0);
  EXPECT_EQ(fxp::quantize(0, 7, fmt(4, 9)).raw(), 0);
}

TEST(Quantize, TruncatesTowardZero) {
  // 3/8 = 0.011b -> 0.01b
  EXPECT_EQ(fxp::quantize(3, 8, fmt(4, 2)).raw(), 1);
  EXPECT_DOUBLE_EQ(fxp::quantize(3, 8, fmt(4, 2)).to_double(), 0.25);
  EXPECT_DOUBLE_EQ(fxp::quantize(-3, 8, fmt(4, 2)).to_double(), -0.25);
}

TEST(Quantize, MatchesTruncatedRationalOnGrid) {
  const auto f = fmt(6, 5);
  for (int num = -200; num <= 200; ++num) {
    for (int den : {1, 3, 7, 10}) {
      const double exact = static_cast<double>(num) / den;
      if (std::abs(exact) >= 31.0) continue;  // outside Q6.5
      const auto want = static_cast<std::int64_t>(std::trunc(exact * 32.0));
      // exact*32 may be an integer up to rounding; compare with integer math
      const std::int64_t want_int = (static_cast<std::int64_t>(num) * 32) / den;
      ASSERT_EQ(want, want_int);
      EXPECT_EQ(fxp::quantize(num, den, f).raw(), want_int) << num << "/" << den;
    }
  }
}

TEST(Quantize, OverflowIsAnError) {
  EXPECT_EQ(code_of([] { fxp::quantize(16, 1, fmt(4, 0)); }), ErrorCode::kOverflow);
  EXPECT_EQ(code_of([] { fxp::quantize(-16, 1, fmt(4, 0)); }), ErrorCode::kOverflow);
  EXPECT_NO_THROW(fxp::quantize(15, 1, fmt(4, 0)));
}

TEST(Format, RejectsBadWidths) {
  EXPECT_THROW(fmt(0, 3).validate(), Error);
  EXPECT_THROW(fmt(2, -1).validate(), Error);
  EXPECT_NO_THROW(fmt(1, 0).validate());
}

TEST(Arithmetic, MulByOneIsIdentity) {
  const auto f = fmt(8, 4);
  const auto one = fxp::FxScalar::from_int(1, f);
  for (int r = -200; r <= 200; r += 7) {
    const auto x = fxp::FxScalar::from_raw(r, f);
    EXPECT_EQ(fxp::fx_mul(one, x), x);
  }
}

TEST(Arithmetic, MulTruncatesProduct) {
  const auto f = fmt(8, 2);
  // 0.75 * 0.75 = 0.5625 -> 0.5
  const auto a = fxp::quantize(3, 4, f);
  EXPECT_DOUBLE_EQ(fxp::fx_mul(a, a).to_double(), 0.5);
  // -0.75 * 0.75 = -0.5625 -> -0.5
  const auto b = fxp::quantize(-3, 4, f);
  EXPECT_DOUBLE_EQ(fxp::fx_mul(a, b).to_double(), -0.5);
}

TEST(Arithmetic, AddOverflowDetected) {
  const auto f = fmt(3, 0);
  const auto a = fxp::FxScalar::from_int(5, f);
  EXPECT_THROW(fxp::fx_add(a, a), Error);
}

TEST(Arithmetic, MixedFormatsRejected) {
  const auto a = fxp::FxScalar::from_int(1, fmt(4, 1));
  const auto b = fxp::FxScalar::from_int(1, fmt(4, 2));
  EXPECT_THROW(fxp::fx_add(a, b), Error);
}

TEST(Inner, OrthogonalPair) {
  const auto f = fmt(4, 0);
  const std::vector<std::int64_t> a{1, 1}, b{1, -1};
  const auto va = fxp::to_fx(a, f), vb = fxp::to_fx(b, f);
  EXPECT_EQ(fxp::fx_inner(va, vb).raw(), 0);
}

TEST(Inner, LengthMismatch) {
  const auto f = fmt(4, 0);
  const std::vector<std::int64_t> a{1, 1}, b{1};
  EXPECT_THROW(fxp::fx_inner(fxp::to_fx(a, f), fxp::to_fx(b, f)), Error);
}

TEST(Inner, SelectorVectorsMatchingIndexGiveZero) {
  for (int s = 2; s <= 6; ++s) {
    const auto f = fxp::selector_format(s);
    for (std::uint64_t i = 1; i < (1u << s); ++i) {
      const auto q = fxp::to_fx(fxp::ortho_query(i, s), f);
      const auto k = fxp::to_fx(fxp::ortho_key(i, s), f);
      EXPECT_EQ(fxp::fx_inner(q, k).raw(), 0) << "s=" << s << " i=" << i;
    }
  }
}

TEST(Exp, ZeroIsOne) {
  const auto f = fmt(4, 6);
  EXPECT_EQ(fxp::fx_exp(fxp::FxScalar::from_int(0, f)).raw(), f.one());
}

TEST(Exp, MinusOneAtFourFractionBits) {
  const auto f = fmt(4, 4);
  const auto e = fxp::fx_exp(fxp::FxScalar::from_int(-1, f));
  EXPECT_EQ(e.raw(), 5);  // floor(16 / e) = 5
  EXPECT_DOUBLE_EQ(e.to_double(), 5.0 / 16.0);
}

TEST(Exp, TruncatedAgainstLongDouble) {
  const auto f = fmt(6, 8);
  for (int r = -3000; r < 900; r += 13) {
    const long double x = static_cast<long double>(r) / 256.0L;
    const auto want = static_cast<std::int64_t>(std::floor(std::exp(x) * 256.0L));
    EXPECT_EQ(fxp::exp(r, f), want) << r;
  }
}

TEST(Exp, OverflowDetected) {
  const auto f = fmt(3, 2);
  EXPECT_THROW(fxp::exp(fxp::from_int(3, f), f), Error);  // e^3 > 8
}

TEST(Exp, SelectorMismatchUnderflowsToZero) {
  for (int s = 2; s <= 5; ++s) {
    const auto f = fxp::selector_format(s);
    const auto q = fxp::to_fx(fxp::ortho_query(1, s), f);
    const auto k = fxp::to_fx(fxp::ortho_key(2, s), f);
    EXPECT_EQ(fxp::fx_exp(fxp::fx_inner(q, k)).raw(), 0);
  }
}

TEST(Bin, Examples) {
  EXPECT_EQ(fxp::bin(0, 3), (fxp::BitVector{0, 0, 0}));
  EXPECT_EQ(fxp::bin(5, 3), (fxp::BitVector{1, 0, 1}));
  EXPECT_EQ(fxp::bin(6, 3), (fxp::BitVector{0, 1, 1}));  // LSB first
  EXPECT_EQ(fxp::sbin(0, 2), (fxp::BitVector{-1, -1}));
  EXPECT_EQ(fxp::sbin(2, 2), (fxp::BitVector{-1, 1}));
}

TEST(Bin, RoundTripAndRange) {
  for (std::uint64_t x = 0; x < 256; ++x) {
    const auto b = fxp::bin(x, 8);
    EXPECT_EQ(fxp::decode_bin(b), x);
    std::uint64_t manual = 0;
    for (int i = 0; i < 8; ++i) manual += static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << i;
    EXPECT_EQ(manual, x);
  }
  EXPECT_THROW(fxp::bin(8, 3), Error);
}

TEST(Interleave, Examples) {
  const std::vector<int> e;
  EXPECT_TRUE(fxp::interleave<int>(e, e).empty());
  const std::vector<int> a{7}, b{9};
  EXPECT_EQ(fxp::interleave<int>(a, b), (std::vector<int>{7, 9}));
  const std::vector<int> x{1, 2}, y{3, 4};
  EXPECT_EQ(fxp::interleave<int>(x, y), (std::vector<int>{1, 3, 2, 4}));
  const std::vector<int> z{1, 2, 3};
  EXPECT_THROW(fxp::interleave<int>(x, z), Error);
}

TEST(Selector, SmallExamples) {
  const auto f = fxp::selector_format(2);
  EXPECT_EQ(fxp::selector_value(1, 1, 2), f.one());
  EXPECT_EQ(fxp::selector_value(1, 2, 2), 0);
}

TEST(Selector, IdentityMatrixUpToSix) {
  // Exhaustive to s = 8 lives in the acceptance suite.
  for (int s = 2; s <= 6; ++s) {
    const auto one = fxp::selector_format(s).one();
    for (std::uint64_t i = 1; i < (1u << s); ++i) {
      for (std::uint64_t j = 1; j < (1u << s); ++j) {
        ASSERT_EQ(fxp::selector_value(i, j, s), i == j ? one : 0) << s << " " << i << " " << j;
      }
    }
  }
}
