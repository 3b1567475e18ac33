// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-layer ReLU feedforward constructions: Boolean and threshold gates over
// inputs interleaved with constant-1 slots, exact table lookups over one-hot
// encodings, and the one-hot threshold step.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cotloop/fxp.hpp"
#include "cotloop/graph.hpp"
#include "cotloop/tfcore.hpp"

namespace cotloop::gates {

using fxp::FxFormat;
using fxp::Raw;

enum class PrecisionClass { kConstantBit, kLogBit };

const char* precision_name(PrecisionClass p);

// out = W2 ReLU(W1 z + b1). All constructions here have integer weights.
struct FFWeights {
  std::size_t inputs = 0;
  std::vector<std::vector<std::int64_t>> w1;  // hidden x inputs
  std::vector<std::int64_t> b1;               // hidden
  std::vector<std::vector<std::int64_t>> w2;  // outputs x hidden
  PrecisionClass precision = PrecisionClass::kConstantBit;

  std::size_t hidden() const { return w1.size(); }
  std::size_t outputs() const { return w2.size(); }
  std::int64_t max_abs_weight() const;
};

// Gate inputs are (x_1, 1, x_2, 1, ..., x_n, 1); the output is one value.
FFWeights ff_and(int n);
FFWeights ff_or(int n);
FFWeights ff_not();
FFWeights ff_threshold(int n, int k);  // 1 iff sum x >= k
FFWeights ff_majority(int n);          // threshold floor(n/2) + 1

// (x_1, ..., x_n) -> (x_1, 1, ..., x_n, 1).
std::vector<std::int64_t> with_constant_slots(std::span<const int> bits);

// Exact integer evaluation, and fixed-point evaluation in fmt.
std::vector<std::int64_t> ff_eval(const FFWeights& w, std::span<const std::int64_t> z);
std::vector<Raw> ff_eval_fx(const FFWeights& w, std::span<const Raw> z, const FxFormat& fmt);

// Lookup network for f over the concatenated one-hots of its arguments: one
// hidden unit per argument tuple, ReLU(matched - (arity - 1)).
FFWeights table_function(const graph::LocalFunction& f, std::size_t alphabet_size, int fan_in_cap = 3);

std::vector<std::int64_t> concat_onehots(std::span<const graph::Symbol> args, std::size_t alphabet_size);

// Step y -> 1[y > 1 - delta] on the fraction grid of fmt, built from two ReLU
// units: ReLU(K y - K(1-delta)) - ReLU(K y - K(1-delta) - 1) with K = 2^F.
struct OneHotThreshold {
  // delta = delta_num / 2^delta_bits.
  std::int64_t delta_num = 1;
  int delta_bits = 2;

  Raw threshold_raw(const FxFormat& fmt) const;  // raw of 1 - delta
  // Throws kMarginViolated unless exactly one entry exceeds 1 - delta and it
  // is the only one; returns the exact one-hot otherwise.
  std::vector<Raw> apply(std::span<const Raw> y, const FxFormat& fmt, bool verify = true) const;
};

OneHotThreshold onehot_threshold(std::int64_t delta_num = 1, int delta_bits = 2);

// Index j with y_j > 1 - delta and y_i < 1 - delta elsewhere, or kMarginViolated.
std::size_t check_margin(std::span<const Raw> y, const FxFormat& fmt, const OneHotThreshold& t);

// Incrementally assembles one StandardFF over an m-wide hidden state.
class FFAssembler {
 public:
  FFAssembler(std::size_t m, const FxFormat& fmt) : m_(m), fmt_(fmt) {}

  // New unit ReLU(sum w * z[slot] + bias); weights and bias are integers.
  std::size_t add_unit(const std::vector<std::pair<std::size_t, std::int64_t>>& in, std::int64_t bias);
  // New unit with a raw bias (for non-integer thresholds).
  std::size_t add_unit_raw(const std::vector<std::pair<std::size_t, Raw>>& in_raw, Raw bias_raw);
  void add_output(std::size_t unit, std::size_t slot, std::int64_t weight);

  // Embeds w: FF input k reads slot input_slots[k], output r adds into
  // output_slots[r].
  void place(const FFWeights& w, std::span<const std::size_t> input_slots,
             std::span<const std::size_t> output_slots);

  std::size_t units() const { return b1_.size(); }
  tf::StandardFF build() const;

 private:
  std::size_t m_;
  FxFormat fmt_;
  std::vector<tf::Triplet> w1_;
  std::vector<Raw> b1_;
  std::vector<tf::Triplet> w2_;
};

}  // namespace cotloop::gates
