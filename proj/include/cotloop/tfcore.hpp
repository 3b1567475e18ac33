// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact interpreter for fixed-point Transformer programs with saturated
// (hard-max) attention, in causal CoT mode and non-causal looped mode.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cotloop/fxp.hpp"

namespace cotloop::tf {

using fxp::FxFormat;
using fxp::Raw;

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  Raw value = 0;
};

// Compressed sparse rows of raw fixed-point weights.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  // Entries with the same (row, col) are summed.
  static Matrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  Raw at(std::size_t r, std::size_t c) const;
  std::vector<Triplet> triplets() const;
  Matrix with_entry(std::size_t r, std::size_t c, Raw value) const;

  // y = M x with one truncation per multiply and per accumulation.
  void apply(std::span<const Raw> x, std::span<Raw> y, const FxFormat& fmt,
             const char* site) const;
  std::vector<Raw> apply(std::span<const Raw> x, const FxFormat& fmt, const char* site) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<Raw> values_;
};

class MatrixBuilder {
 public:
  MatrixBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}
  void add(std::size_t r, std::size_t c, Raw value);
  Matrix build() const { return Matrix::from_triplets(rows_, cols_, entries_); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Triplet> entries_;
};

struct Head {
  Matrix query;  // s x m
  Matrix key;    // s x m
  Matrix value;  // s_v x m
};

struct StandardFF {
  Matrix w1;             // hidden x m
  std::vector<Raw> b1;   // hidden
  Matrix w2;             // m x hidden
};

struct MoEFF {
  Matrix gate;  // experts x m
  std::vector<StandardFF> experts;
};

// monostate: feedforward disabled.
using FeedForward = std::variant<std::monostate, StandardFF, MoEFF>;

struct Layer {
  std::vector<Head> heads;
  Matrix merge;  // m x sum(s_v); ignored when there are no heads
  FeedForward ff;
};

enum class Mode { kCot, kLooped };
enum class Mask { kCausal, kFull };

const char* mode_name(Mode m);

// Rows indexed by (position, loop); positions are 1-based. CoT programs use a
// single loop row.
struct PositionalTable {
  std::size_t loops = 0;
  std::size_t positions = 0;
  std::vector<std::vector<Raw>> rows;  // loop-major

  std::span<const Raw> row(std::size_t position, std::size_t loop) const;
  std::vector<Raw>& mutable_row(std::size_t position, std::size_t loop);
};

struct TransformerProgram {
  FxFormat fmt;
  std::size_t embed_dim = 0;
  std::vector<std::string> vocab;
  std::vector<std::vector<Raw>> word_embed;  // vocab x m
  PositionalTable pos_embed;
  std::vector<Layer> layers;
  Mask mask = Mask::kCausal;
  Matrix output_proj;  // |vocab| x m
  Mode mode = Mode::kCot;
  // Number of trailing tokens/positions that form the answer.
  std::size_t answer_length = 0;
  // Decode steps (CoT) or loops (looped) the compiler says are required.
  std::size_t declared_budget = 0;
  // Free-form integer facts recorded by the compiler (|V|, depth, ...).
  std::map<std::string, std::int64_t> meta;

  // Throws kInvalidArgument on inconsistent shapes, kOverflow on weights that
  // are not representable in fmt.
  void validate() const;
};

using Hidden = std::vector<std::vector<Raw>>;  // positions x m

struct Trace {
  Mode mode = Mode::kCot;
  std::size_t steps = 0;
  std::vector<int> tokens;        // CoT: token decoded at each step
  std::vector<Hidden> snapshots;  // looped: hidden state after each loop
};

struct RunResult {
  std::vector<int> answer;  // vocab indices
  Trace trace;
};

// Context vector for every query position: the exact mean of the values at
// the argmax-score positions inside the mask window, truncated once.
Hidden saturated_attention(const Hidden& queries, const Hidden& keys, const Hidden& values,
                           Mask mask, const FxFormat& fmt);
std::vector<Raw> saturated_attention_at(std::size_t position, const Hidden& queries,
                                        const Hidden& keys, const Hidden& values, Mask mask,
                                        const FxFormat& fmt);

// Feedforward output (residual not included). MoE routes to the argmax gate
// score, lowest expert index on ties.
std::vector<Raw> ff_apply(const FeedForward& ff, std::span<const Raw> z, const FxFormat& fmt);
std::size_t moe_route(const MoEFF& moe, std::span<const Raw> z, const FxFormat& fmt);

// (id + FF) o (id + SA) over every position.
void layer_forward(const Layer& layer, Hidden& h, Mask mask, const FxFormat& fmt);

// Argmax over the output projection, lowest index on ties.
int decode(const TransformerProgram& prog, std::span<const Raw> h);

RunResult run_cot(const TransformerProgram& prog, std::span<const int> x, std::size_t budget);
RunResult run_looped(const TransformerProgram& prog, std::span<const int> x, std::size_t loops,
                     bool record_snapshots = true);

// Runs with the declared budget, or an override that must not be smaller
// (kBudgetTooSmall names the required count).
RunResult run_program(const TransformerProgram& prog, std::span<const int> x,
                      std::optional<std::size_t> budget = std::nullopt);

int vocab_index(const TransformerProgram& prog, const std::string& token);

}  // namespace cotloop::tf
