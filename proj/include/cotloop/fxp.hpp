// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Truncated fixed-point arithmetic. A value is raw / 2^fraction_bits; every
// primitive re-truncates toward zero and rejects results with
// |value| >= 2^integer_bits.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cotloop/errors.hpp"

namespace cotloop::fxp {

using Raw = std::int64_t;

struct FxFormat {
  int integer_bits = 1;
  int fraction_bits = 0;

  // Throws kInvalidArgument unless integer_bits >= 1, fraction_bits >= 0 and
  // the total fits a signed 64-bit raw with headroom for products.
  void validate() const;

  // Exclusive bound on |raw|.
  Raw raw_limit() const { return Raw{1} << (integer_bits + fraction_bits); }
  Raw one() const { return Raw{1} << fraction_bits; }

  friend bool operator==(const FxFormat&, const FxFormat&) = default;
};

// Smallest b with 2^b > magnitude.
int bits_for_magnitude(std::uint64_t magnitude);

// Format with the requested fraction bits and enough integer bits for
// |value| <= max_magnitude plus one guard bit.
FxFormat format_for(std::uint64_t max_magnitude, int fraction_bits);

// Raw-level kernels. `site` is carried into overflow diagnostics.
Raw check(__int128 raw, const FxFormat& fmt, const char* site);
Raw from_int(std::int64_t v, const FxFormat& fmt, const char* site = "from_int");
Raw quantize_raw(std::int64_t num, std::int64_t den, const FxFormat& fmt,
                 const char* site = "quantize");
Raw add(Raw a, Raw b, const FxFormat& fmt, const char* site = "fx_add");
Raw sub(Raw a, Raw b, const FxFormat& fmt, const char* site = "fx_sub");
Raw mul(Raw a, Raw b, const FxFormat& fmt, const char* site = "fx_mul");
// One truncation per multiply and per accumulation step.
Raw inner(std::span<const Raw> a, std::span<const Raw> b, const FxFormat& fmt,
          const char* site = "fx_inner");
Raw exp(Raw a, const FxFormat& fmt, const char* site = "fx_exp");
inline Raw relu(Raw a) { return a > 0 ? a : 0; }
// Exact average of `count` values whose raw sum is `sum`, truncated.
Raw average(__int128 sum, std::int64_t count, const FxFormat& fmt,
            const char* site = "fx_average");

double to_double(Raw raw, const FxFormat& fmt);

class FxScalar {
 public:
  FxScalar() = default;
  static FxScalar from_raw(Raw raw, const FxFormat& fmt);
  static FxScalar from_int(std::int64_t v, const FxFormat& fmt);

  Raw raw() const { return raw_; }
  const FxFormat& format() const { return fmt_; }
  double to_double() const { return fxp::to_double(raw_, fmt_); }

  friend bool operator==(const FxScalar&, const FxScalar&) = default;

 private:
  FxScalar(Raw raw, FxFormat fmt) : raw_(raw), fmt_(fmt) {}
  Raw raw_ = 0;
  FxFormat fmt_;
};

// Truncation toward zero of num/den.
FxScalar quantize(std::int64_t num, std::int64_t den, const FxFormat& fmt);
FxScalar fx_add(const FxScalar& a, const FxScalar& b);
FxScalar fx_mul(const FxScalar& a, const FxScalar& b);
FxScalar fx_inner(std::span<const FxScalar> a, std::span<const FxScalar> b);
FxScalar fx_exp(const FxScalar& a);

std::vector<FxScalar> to_fx(std::span<const std::int64_t> ints, const FxFormat& fmt);

// Binary encodings. bin is LSB first: x = sum_i 2^(i-1) * bin(x)_i (1-based).
using BitVector = std::vector<int>;
BitVector bin(std::uint64_t x, int s);
BitVector sbin(std::uint64_t x, int s);
std::uint64_t decode_bin(std::span<const int> bits);

template <typename T>
std::vector<T> interleave(std::span<const T> x, std::span<const T> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "interleave: length mismatch " + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()));
  }
  std::vector<T> out;
  out.reserve(2 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.push_back(x[i]);
    out.push_back(y[i]);
  }
  return out;
}

// Selector pair with <q_i, k_j> = 0 iff i == j and <= -2^(s+2) otherwise, so
// the truncated exponential of the inner product is the indicator 1[i=j].
// Index 0 is accepted as well (it matches only key 0).
std::vector<std::int64_t> ortho_query(std::uint64_t i, int s);
std::vector<std::int64_t> ortho_key(std::uint64_t j, int s);

// Format that holds every <ortho_query(i,s), ortho_key(j,s)> partial sum,
// with s fraction bits.
FxFormat selector_format(int s);

// Selector value exp(<q_i, k_j>_s) truncated at s fraction bits, as a raw.
Raw selector_value(std::uint64_t i, std::uint64_t j, int s);

}  // namespace cotloop::fxp
