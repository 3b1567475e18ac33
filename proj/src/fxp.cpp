// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/fxp.hpp"

#include <cmath>

namespace cotloop::fxp {

namespace {

constexpr int kMaxTotalBits = 62;

std::string overflow_message(const char* site, const FxFormat& fmt) {
  return std::string(site) + ": result exceeds Q" + std::to_string(fmt.integer_bits) +
         "." + std::to_string(fmt.fraction_bits) + " range";
}

// C++ integer division truncates toward zero, which is the rounding rule.
__int128 div_trunc(__int128 num, __int128 den) { return num / den; }

}  // namespace

void FxFormat::validate() const {
  if (integer_bits < 1 || fraction_bits < 0 ||
      integer_bits + fraction_bits > kMaxTotalBits) {
    throw Error(ErrorCode::kInvalidArgument,
                "FxFormat: need integer_bits >= 1, fraction_bits >= 0, total <= 62 (got " +
                    std::to_string(integer_bits) + "," + std::to_string(fraction_bits) + ")");
  }
}

int bits_for_magnitude(std::uint64_t magnitude) {
  int b = 0;
  while (b < 64 && (std::uint64_t{1} << b) <= magnitude) ++b;
  return b;
}

FxFormat format_for(std::uint64_t max_magnitude, int fraction_bits) {
  FxFormat fmt{bits_for_magnitude(max_magnitude) + 1, fraction_bits};
  fmt.validate();
  return fmt;
}

Raw check(__int128 raw, const FxFormat& fmt, const char* site) {
  const __int128 lim = fmt.raw_limit();
  if (raw >= lim || raw <= -lim) throw Error(ErrorCode::kOverflow, overflow_message(site, fmt));
  return static_cast<Raw>(raw);
}

Raw from_int(std::int64_t v, const FxFormat& fmt, const char* site) {
  return check(static_cast<__int128>(v) << fmt.fraction_bits, fmt, site);
}

Raw quantize_raw(std::int64_t num, std::int64_t den, const FxFormat& fmt, const char* site) {
  if (den == 0) throw Error(ErrorCode::kInvalidArgument, std::string(site) + ": zero denominator");
  return check(div_trunc(static_cast<__int128>(num) << fmt.fraction_bits, den), fmt, site);
}

Raw add(Raw a, Raw b, const FxFormat& fmt, const char* site) {
  return check(static_cast<__int128>(a) + b, fmt, site);
}

Raw sub(Raw a, Raw b, const FxFormat& fmt, const char* site) {
  return check(static_cast<__int128>(a) - b, fmt, site);
}

Raw mul(Raw a, Raw b, const FxFormat& fmt, const char* site) {
  return check(div_trunc(static_cast<__int128>(a) * b, __int128{1} << fmt.fraction_bits), fmt,
               site);
}

Raw inner(std::span<const Raw> a, std::span<const Raw> b, const FxFormat& fmt,
          const char* site) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(site) + ": length mismatch");
  }
  Raw acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc = add(acc, mul(a[i], b[i], fmt, site), fmt, site);
  return acc;
}

Raw exp(Raw a, const FxFormat& fmt, const char* site) {
  if (a == 0) return fmt.one();
  const long double x = std::ldexp(static_cast<long double>(a), -fmt.fraction_bits);
  // e^x >= 2^I is out of range; compare in the log domain first so huge x
  // never reaches std::exp.
  if (x >= static_cast<long double>(fmt.integer_bits) * std::log(2.0L)) {
    throw Error(ErrorCode::kOverflow, overflow_message(site, fmt));
  }
  const long double scaled = std::ldexp(std::exp(x), fmt.fraction_bits);
  return check(static_cast<__int128>(std::floor(scaled)), fmt, site);
}

Raw average(__int128 sum, std::int64_t count, const FxFormat& fmt, const char* site) {
  if (count <= 0) throw Error(ErrorCode::kInvalidArgument, std::string(site) + ": empty average");
  return check(div_trunc(sum, count), fmt, site);
}

double to_double(Raw raw, const FxFormat& fmt) {
  return std::ldexp(static_cast<double>(raw), -fmt.fraction_bits);
}

FxScalar FxScalar::from_raw(Raw raw, const FxFormat& fmt) {
  fmt.validate();
  return FxScalar(check(raw, fmt, "from_raw"), fmt);
}

FxScalar FxScalar::from_int(std::int64_t v, const FxFormat& fmt) {
  fmt.validate();
  return FxScalar(fxp::from_int(v, fmt), fmt);
}

FxScalar quantize(std::int64_t num, std::int64_t den, const FxFormat& fmt) {
  return FxScalar::from_raw(quantize_raw(num, den, fmt), fmt);
}

namespace {
const FxFormat& common(const FxScalar& a, const FxScalar& b, const char* site) {
  if (!(a.format() == b.format())) {
    throw Error(ErrorCode::kInvalidArgument, std::string(site) + ": format mismatch");
  }
  return a.format();
}
}  // namespace

FxScalar fx_add(const FxScalar& a, const FxScalar& b) {
  const auto& fmt = common(a, b, "fx_add");
  return FxScalar::from_raw(add(a.raw(), b.raw(), fmt), fmt);
}

FxScalar fx_mul(const FxScalar& a, const FxScalar& b) {
  const auto& fmt = common(a, b, "fx_mul");
  return FxScalar::from_raw(mul(a.raw(), b.raw(), fmt), fmt);
}

FxScalar fx_inner(std::span<const FxScalar> a, std::span<const FxScalar> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "fx_inner: length mismatch");
  if (a.empty()) throw Error(ErrorCode::kInvalidArgument, "fx_inner: empty vectors carry no format");
  const FxFormat fmt = a[0].format();
  Raw acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    common(a[i], b[i], "fx_inner");
    if (!(a[i].format() == fmt)) throw Error(ErrorCode::kInvalidArgument, "fx_inner: format mismatch");
    acc = add(acc, mul(a[i].raw(), b[i].raw(), fmt, "fx_inner"), fmt, "fx_inner");
  }
  return FxScalar::from_raw(acc, fmt);
}

FxScalar fx_exp(const FxScalar& a) {
  return FxScalar::from_raw(exp(a.raw(), a.format()), a.format());
}

std::vector<FxScalar> to_fx(std::span<const std::int64_t> ints, const FxFormat& fmt) {
  std::vector<FxScalar> out;
  out.reserve(ints.size());
  for (auto v : ints) out.push_back(FxScalar::from_int(v, fmt));
  return out;
}

BitVector bin(std::uint64_t x, int s) {
  if (s < 0 || s > 63 || x >= (std::uint64_t{1} << s)) {
    throw Error(ErrorCode::kOutOfRange,
                "bin: " + std::to_string(x) + " does not fit in " + std::to_string(s) + " bits");
  }
  BitVector bits(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) bits[static_cast<std::size_t>(i)] = static_cast<int>((x >> i) & 1U);
  return bits;
}

BitVector sbin(std::uint64_t x, int s) {
  auto bits = bin(x, s);
  for (auto& b : bits) b = 2 * b - 1;
  return bits;
}

std::uint64_t decode_bin(std::span<const int> bits) {
  std::uint64_t x = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0 && bits[i] != 1) throw Error(ErrorCode::kInvalidArgument, "decode_bin: non-binary digit");
    x |= static_cast<std::uint64_t>(bits[i]) << i;
  }
  return x;
}

namespace {
std::vector<std::int64_t> widen(const BitVector& b) { return {b.begin(), b.end()}; }
}  // namespace

std::vector<std::int64_t> ortho_query(std::uint64_t i, int s) {
  const auto signs = widen(sbin(i, s));
  const std::vector<std::int64_t> ones(static_cast<std::size_t>(s), 1);
  return interleave<std::int64_t>(signs, ones);
}

std::vector<std::int64_t> ortho_key(std::uint64_t j, int s) {
  const auto signs = widen(sbin(j, s));
  const std::vector<std::int64_t> minus(static_cast<std::size_t>(s), -1);
  auto k = interleave<std::int64_t>(signs, minus);
  const std::int64_t scale = std::int64_t{1} << (s + 1);
  for (auto& v : k) v *= scale;
  return k;
}

FxFormat selector_format(int s) {
  // |partial sums| <= 2s * 2^(s+1).
  return format_for(static_cast<std::uint64_t>(2 * s) << (s + 1), s);
}

Raw selector_value(std::uint64_t i, std::uint64_t j, int s) {
  const FxFormat fmt = selector_format(s);
  std::vector<Raw> q, k;
  for (auto v : ortho_query(i, s)) q.push_back(from_int(v, fmt));
  for (auto v : ortho_key(j, s)) k.push_back(from_int(v, fmt));
  return exp(inner(q, k, fmt, "selector"), fmt, "selector");
}

}  // namespace cotloop::fxp
