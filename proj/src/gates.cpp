// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/gates.hpp"

#include <algorithm>

#include "cotloop/errors.hpp"

namespace cotloop::gates {

const char* precision_name(PrecisionClass p) {
  return p == PrecisionClass::kConstantBit ? "constant-bit" : "log-bit";
}

std::int64_t FFWeights::max_abs_weight() const {
  std::int64_t best = 0;
  auto scan = [&](std::int64_t v) { best = std::max(best, v < 0 ? -v : v); };
  for (const auto& r : w1) std::for_each(r.begin(), r.end(), scan);
  std::for_each(b1.begin(), b1.end(), scan);
  for (const auto& r : w2) std::for_each(r.begin(), r.end(), scan);
  return best;
}

namespace {

void require_n(int n, const char* what) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": need n >= 1");
}

// Unit sum(x) + c over the interleaved layout; c is spread as +-1 over the
// constant slots so every weight stays in {-1, 0, 1}.
std::vector<std::int64_t> sum_plus_constant(int n, std::int64_t c) {
  std::vector<std::int64_t> row(static_cast<std::size_t>(2 * n), 0);
  for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(2 * i)] = 1;
  const std::int64_t mag = c < 0 ? -c : c;
  if (mag > n) throw Error(ErrorCode::kInvalidArgument, "gate constant exceeds the constant slots");
  for (std::int64_t i = 0; i < mag; ++i) row[static_cast<std::size_t>(2 * i + 1)] = c < 0 ? -1 : 1;
  return row;
}

// ReLU(s + c1) - ReLU(s + c2) with s = sum x.
FFWeights clamp_pair(int n, std::int64_t c1, std::int64_t c2, PrecisionClass p) {
  FFWeights w;
  w.inputs = static_cast<std::size_t>(2 * n);
  w.w1 = {sum_plus_constant(n, c1), sum_plus_constant(n, c2)};
  w.b1 = {0, 0};
  w.w2 = {{1, -1}};
  w.precision = p;
  return w;
}

}  // namespace

FFWeights ff_and(int n) {
  require_n(n, "ff_and");
  return clamp_pair(n, -(n - 1), -n, PrecisionClass::kConstantBit);
}

FFWeights ff_or(int n) {
  require_n(n, "ff_or");
  return clamp_pair(n, 0, -1, PrecisionClass::kConstantBit);
}

FFWeights ff_not() {
  FFWeights w;
  w.inputs = 2;
  w.w1 = {{-1, 1}};
  w.b1 = {0};
  w.w2 = {{1}};
  return w;
}

FFWeights ff_threshold(int n, int k) {
  require_n(n, "ff_threshold");
  if (k < 0 || k > n) {
    throw Error(ErrorCode::kInvalidArgument, "ff_threshold: need 0 <= k <= n (k=" +
                                                 std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  return clamp_pair(n, -(k - 1), -k, PrecisionClass::kLogBit);
}

FFWeights ff_majority(int n) {
  require_n(n, "ff_majority");
  return ff_threshold(n, n / 2 + 1);
}

std::vector<std::int64_t> with_constant_slots(std::span<const int> bits) {
  std::vector<std::int64_t> z;
  z.reserve(2 * bits.size());
  for (auto b : bits) {
    z.push_back(b);
    z.push_back(1);
  }
  return z;
}

std::vector<std::int64_t> ff_eval(const FFWeights& w, std::span<const std::int64_t> z) {
  if (z.size() != w.inputs) throw Error(ErrorCode::kInvalidArgument, "ff_eval: input length mismatch");
  std::vector<std::int64_t> h(w.hidden());
  for (std::size_t u = 0; u < w.hidden(); ++u) {
    std::int64_t s = w.b1[u];
    for (std::size_t k = 0; k < z.size(); ++k) s += w.w1[u][k] * z[k];
    h[u] = std::max<std::int64_t>(s, 0);
  }
  std::vector<std::int64_t> out(w.outputs());
  for (std::size_t r = 0; r < w.outputs(); ++r) {
    for (std::size_t u = 0; u < h.size(); ++u) out[r] += w.w2[r][u] * h[u];
  }
  return out;
}

std::vector<Raw> ff_eval_fx(const FFWeights& w, std::span<const Raw> z, const FxFormat& fmt) {
  if (z.size() != w.inputs) throw Error(ErrorCode::kInvalidArgument, "ff_eval_fx: input length mismatch");
  std::vector<Raw> h(w.hidden());
  for (std::size_t u = 0; u < w.hidden(); ++u) {
    Raw s = fxp::from_int(w.b1[u], fmt, "gate bias");
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (w.w1[u][k] == 0) continue;
      s = fxp::add(s, fxp::mul(fxp::from_int(w.w1[u][k], fmt, "gate w1"), z[k], fmt, "gate w1"), fmt, "gate w1");
    }
    h[u] = fxp::relu(s);
  }
  std::vector<Raw> out(w.outputs(), 0);
  for (std::size_t r = 0; r < w.outputs(); ++r) {
    for (std::size_t u = 0; u < h.size(); ++u) {
      if (w.w2[r][u] == 0) continue;
      out[r] = fxp::add(out[r], fxp::mul(fxp::from_int(w.w2[r][u], fmt, "gate w2"), h[u], fmt, "gate w2"), fmt,
                        "gate w2");
    }
  }
  return out;
}

FFWeights table_function(const graph::LocalFunction& f, std::size_t alphabet_size, int fan_in_cap) {
  if (f.arity < 1 || f.arity > fan_in_cap) {
    throw Error(ErrorCode::kArity, "table_function: arity " + std::to_string(f.arity) +
                                       " outside [1, " + std::to_string(fan_in_cap) + "]");
  }
  std::size_t rows = 1;
  for (int c = 0; c < f.arity; ++c) rows *= alphabet_size;
  if (f.table.size() != rows) throw Error(ErrorCode::kValidation, "table_function: table size mismatch");

  FFWeights w;
  w.inputs = static_cast<std::size_t>(f.arity) * alphabet_size;
  w.w2.assign(alphabet_size, std::vector<std::int64_t>(rows, 0));
  for (std::size_t u = 0; u < rows; ++u) {
    std::vector<std::int64_t> row(w.inputs, 0);
    std::size_t rest = u;
    for (int c = f.arity - 1; c >= 0; --c) {
      row[static_cast<std::size_t>(c) * alphabet_size + rest % alphabet_size] = 1;
      rest /= alphabet_size;
    }
    w.w1.push_back(std::move(row));
    w.b1.push_back(-(f.arity - 1));
    w.w2[static_cast<std::size_t>(f.table[u])][u] = 1;
  }
  return w;
}

std::vector<std::int64_t> concat_onehots(std::span<const graph::Symbol> args, std::size_t alphabet_size) {
  std::vector<std::int64_t> z(args.size() * alphabet_size, 0);
  for (std::size_t c = 0; c < args.size(); ++c) {
    if (args[c] < 0 || static_cast<std::size_t>(args[c]) >= alphabet_size) {
      throw Error(ErrorCode::kOutOfRange, "concat_onehots: symbol outside the alphabet");
    }
    z[c * alphabet_size + static_cast<std::size_t>(args[c])] = 1;
  }
  return z;
}

OneHotThreshold onehot_threshold(std::int64_t delta_num, int delta_bits) {
  if (delta_bits < 0 || delta_num <= 0 || delta_num >= (std::int64_t{1} << delta_bits)) {
    throw Error(ErrorCode::kInvalidArgument, "onehot_threshold: need 0 < delta < 1");
  }
  return OneHotThreshold{delta_num, delta_bits};
}

Raw OneHotThreshold::threshold_raw(const FxFormat& fmt) const {
  if (fmt.fraction_bits < delta_bits) {
    throw Error(ErrorCode::kInvalidArgument, "onehot_threshold: delta not representable with " +
                                                 std::to_string(fmt.fraction_bits) + " fraction bits");
  }
  return fmt.one() - (delta_num << (fmt.fraction_bits - delta_bits));
}

std::size_t check_margin(std::span<const Raw> y, const FxFormat& fmt, const OneHotThreshold& t) {
  const Raw thr = t.threshold_raw(fmt);
  std::size_t above = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > thr) {
      ++above;
      j = i;
    } else if (y[i] == thr) {
      throw Error(ErrorCode::kMarginViolated, "entry " + std::to_string(i) + " sits on the threshold");
    }
  }
  if (above != 1) {
    throw Error(ErrorCode::kMarginViolated,
                std::to_string(above) + " entries above 1 - delta, expected exactly one");
  }
  return j;
}

std::vector<Raw> OneHotThreshold::apply(std::span<const Raw> y, const FxFormat& fmt, bool verify) const {
  if (verify) check_margin(y, fmt, *this);
  const Raw thr = threshold_raw(fmt);
  const Raw k = fmt.one();  // slope 2^F, as a raw weight of value 2^F
  const Raw slope = fxp::from_int(k, fmt, "onehot slope");
  std::vector<Raw> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Raw pre = fxp::mul(slope, fxp::sub(y[i], thr, fmt, "onehot shift"), fmt, "onehot scale");
    const Raw h1 = fxp::relu(pre);
    const Raw h2 = fxp::relu(fxp::sub(pre, fmt.one(), fmt, "onehot clamp"));
    out[i] = fxp::sub(h1, h2, fmt, "onehot clamp");
  }
  return out;
}

std::size_t FFAssembler::add_unit(const std::vector<std::pair<std::size_t, std::int64_t>>& in,
                                  std::int64_t bias) {
  std::vector<std::pair<std::size_t, Raw>> raw;
  raw.reserve(in.size());
  for (const auto& [slot, w] : in) raw.emplace_back(slot, fxp::from_int(w, fmt_, "ff weight"));
  return add_unit_raw(raw, fxp::from_int(bias, fmt_, "ff bias"));
}

std::size_t FFAssembler::add_unit_raw(const std::vector<std::pair<std::size_t, Raw>>& in_raw, Raw bias_raw) {
  const std::size_t u = b1_.size();
  for (const auto& [slot, w] : in_raw) {
    if (slot >= m_) throw Error(ErrorCode::kInvalidArgument, "FFAssembler: input slot out of range");
    w1_.push_back({u, slot, w});
  }
  b1_.push_back(fxp::check(bias_raw, fmt_, "ff bias"));
  return u;
}

void FFAssembler::add_output(std::size_t unit, std::size_t slot, std::int64_t weight) {
  if (slot >= m_ || unit >= b1_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "FFAssembler: output slot or unit out of range");
  }
  w2_.push_back({slot, unit, fxp::from_int(weight, fmt_, "ff weight")});
}

void FFAssembler::place(const FFWeights& w, std::span<const std::size_t> input_slots,
                        std::span<const std::size_t> output_slots) {
  if (input_slots.size() != w.inputs || output_slots.size() != w.outputs()) {
    throw Error(ErrorCode::kInvalidArgument, "FFAssembler::place: slot map does not match the weights");
  }
  for (std::size_t u = 0; u < w.hidden(); ++u) {
    std::vector<std::pair<std::size_t, std::int64_t>> in;
    for (std::size_t k = 0; k < w.inputs; ++k) {
      if (w.w1[u][k] != 0) in.emplace_back(input_slots[k], w.w1[u][k]);
    }
    const auto unit = add_unit(in, w.b1[u]);
    for (std::size_t r = 0; r < w.outputs(); ++r) {
      if (w.w2[r][u] != 0) add_output(unit, output_slots[r], w.w2[r][u]);
    }
  }
}

tf::StandardFF FFAssembler::build() const {
  tf::StandardFF ff;
  ff.w1 = tf::Matrix::from_triplets(b1_.size(), m_, w1_);
  ff.b1 = b1_;
  ff.w2 = tf::Matrix::from_triplets(m_, b1_.size(), w2_);
  return ff;
}

}  // namespace cotloop::gates
