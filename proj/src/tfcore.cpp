// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/tfcore.hpp"

#include <algorithm>

#include "cotloop/errors.hpp"

namespace cotloop::tf {

namespace {

void check_dim(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "program shape: " + what);
}

}  // namespace

const char* mode_name(Mode m) { return m == Mode::kCot ? "cot" : "looped"; }

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

Matrix Matrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw Error(ErrorCode::kInvalidArgument,
                  "matrix entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                      ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < entries.size();) {
    const auto r = entries[i].row;
    const auto c = entries[i].col;
    Raw sum = 0;
    for (; i < entries.size() && entries[i].row == r && entries[i].col == c; ++i) sum += entries[i].value;
    if (sum == 0) continue;
    m.col_idx_.push_back(c);
    m.values_.push_back(sum);
    ++m.row_ptr_[r + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

Raw Matrix::at(std::size_t r, std::size_t c) const {
  for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
    if (col_idx_[k] == c) return values_[k];
  }
  return 0;
}

std::vector<Triplet> Matrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(values_.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, col_idx_[k], values_[k]});
  }
  return out;
}

Matrix Matrix::with_entry(std::size_t r, std::size_t c, Raw value) const {
  auto t = triplets();
  std::erase_if(t, [&](const Triplet& e) { return e.row == r && e.col == c; });
  t.push_back({r, c, value});
  return from_triplets(rows_, cols_, std::move(t));
}

void Matrix::apply(std::span<const Raw> x, std::span<Raw> y, const FxFormat& fmt,
                   const char* site) const {
  if (x.size() != cols_ || y.size() != rows_) {
    throw Error(ErrorCode::kInvalidArgument, std::string(site) + ": matrix-vector shape mismatch");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    Raw acc = 0;
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const Raw xv = x[col_idx_[k]];
      if (xv == 0) continue;
      acc = fxp::add(acc, fxp::mul(values_[k], xv, fmt, site), fmt, site);
    }
    y[r] = acc;
  }
}

std::vector<Raw> Matrix::apply(std::span<const Raw> x, const FxFormat& fmt, const char* site) const {
  std::vector<Raw> y(rows_);
  apply(x, y, fmt, site);
  return y;
}

void MatrixBuilder::add(std::size_t r, std::size_t c, Raw value) {
  if (r >= rows_ || c >= cols_) {
    throw Error(ErrorCode::kInvalidArgument, "matrix builder: entry (" + std::to_string(r) + "," +
                                                 std::to_string(c) + ") out of range");
  }
  entries_.push_back({r, c, value});
}

std::span<const Raw> PositionalTable::row(std::size_t position, std::size_t loop) const {
  if (position < 1 || position > positions || loop >= loops) {
    throw Error(ErrorCode::kBudget, "positional table has no row for position " +
                                        std::to_string(position) + ", loop " + std::to_string(loop));
  }
  return rows[loop * positions + (position - 1)];
}

std::vector<Raw>& PositionalTable::mutable_row(std::size_t position, std::size_t loop) {
  if (position < 1 || position > positions || loop >= loops) {
    throw Error(ErrorCode::kBudget, "positional table has no row for position " +
                                        std::to_string(position) + ", loop " + std::to_string(loop));
  }
  return rows[loop * positions + (position - 1)];
}

namespace {

void check_matrix(const Matrix& m, std::size_t rows, std::size_t cols, const FxFormat& fmt,
                  const std::string& name) {
  check_dim(m.rows() == rows && m.cols() == cols,
            name + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  for (const auto& t : m.triplets()) fxp::check(t.value, fmt, name.c_str());
}

void check_vector(std::span<const Raw> v, std::size_t n, const FxFormat& fmt, const std::string& name) {
  check_dim(v.size() == n, name + " has length " + std::to_string(v.size()) + ", expected " +
                               std::to_string(n));
  for (auto x : v) fxp::check(x, fmt, name.c_str());
}

void check_standard(const StandardFF& ff, std::size_t m, const FxFormat& fmt, const std::string& name) {
  const auto hidden = ff.w1.rows();
  check_matrix(ff.w1, hidden, m, fmt, name + ".w1");
  check_vector(ff.b1, hidden, fmt, name + ".b1");
  check_matrix(ff.w2, m, hidden, fmt, name + ".w2");
}

}  // namespace

void TransformerProgram::validate() const {
  fmt.validate();
  const auto m = embed_dim;
  check_dim(!vocab.empty(), "empty vocabulary");
  check_dim(word_embed.size() == vocab.size(), "word embedding rows != vocabulary size");
  for (std::size_t i = 0; i < word_embed.size(); ++i) check_vector(word_embed[i], m, fmt, "word_embed");
  check_dim(pos_embed.rows.size() == pos_embed.loops * pos_embed.positions,
            "positional table row count");
  for (const auto& r : pos_embed.rows) check_vector(r, m, fmt, "pos_embed");
  check_dim(mode == Mode::kCot ? pos_embed.loops == 1 : true, "CoT programs have one loop row");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto name = "layer" + std::to_string(l);
    std::size_t concat = 0;
    for (std::size_t h = 0; h < layer.heads.size(); ++h) {
      const auto& head = layer.heads[h];
      const auto hn = name + ".head" + std::to_string(h);
      check_matrix(head.query, head.query.rows(), m, fmt, hn + ".q");
      check_matrix(head.key, head.query.rows(), m, fmt, hn + ".k");
      check_matrix(head.value, head.value.rows(), m, fmt, hn + ".v");
      concat += head.value.rows();
    }
    if (!layer.heads.empty()) check_matrix(layer.merge, m, concat, fmt, name + ".merge");
    if (const auto* s = std::get_if<StandardFF>(&layer.ff)) check_standard(*s, m, fmt, name + ".ff");
    if (const auto* moe = std::get_if<MoEFF>(&layer.ff)) {
      check_matrix(moe->gate, moe->experts.size(), m, fmt, name + ".gate");
      check_dim(!moe->experts.empty(), name + ": MoE without experts");
      for (std::size_t e = 0; e < moe->experts.size(); ++e) {
        check_standard(moe->experts[e], m, fmt, name + ".expert" + std::to_string(e));
      }
    }
  }
  check_matrix(output_proj, vocab.size(), m, fmt, "output_proj");
}

std::vector<Raw> saturated_attention_at(std::size_t i, const Hidden& queries, const Hidden& keys,
                                        const Hidden& values, Mask mask, const FxFormat& fmt) {
  const std::size_t window = mask == Mask::kCausal ? i + 1 : keys.size();
  if (window == 0 || window > keys.size()) {
    throw Error(ErrorCode::kInvalidArgument, "attention: empty window");
  }
  Raw best = 0;
  std::vector<std::size_t> argmax;
  for (std::size_t j = 0; j < window; ++j) {
    const Raw s = fxp::inner(queries[i], keys[j], fmt, "attention score");
    if (argmax.empty() || s > best) {
      best = s;
      argmax.assign(1, j);
    } else if (s == best) {
      argmax.push_back(j);
    }
  }
  const std::size_t dv = values[argmax.front()].size();
  std::vector<Raw> out(dv);
  for (std::size_t c = 0; c < dv; ++c) {
    __int128 sum = 0;
    for (auto j : argmax) sum += values[j][c];
    out[c] = fxp::average(sum, static_cast<std::int64_t>(argmax.size()), fmt, "attention average");
  }
  return out;
}

Hidden saturated_attention(const Hidden& queries, const Hidden& keys, const Hidden& values,
                           Mask mask, const FxFormat& fmt) {
  if (queries.size() != keys.size() || keys.size() != values.size()) {
    throw Error(ErrorCode::kInvalidArgument, "attention: query/key/value position counts differ");
  }
  Hidden out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out.push_back(saturated_attention_at(i, queries, keys, values, mask, fmt));
  }
  return out;
}

namespace {

std::vector<Raw> standard_apply(const StandardFF& ff, std::span<const Raw> z, const FxFormat& fmt) {
  auto hidden = ff.w1.apply(z, fmt, "ff.w1");
  for (std::size_t u = 0; u < hidden.size(); ++u) {
    hidden[u] = fxp::relu(fxp::add(hidden[u], ff.b1[u], fmt, "ff.b1"));
  }
  return ff.w2.apply(hidden, fmt, "ff.w2");
}

}  // namespace

std::size_t moe_route(const MoEFF& moe, std::span<const Raw> z, const FxFormat& fmt) {
  const auto scores = moe.gate.apply(z, fmt, "moe.gate");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

std::vector<Raw> ff_apply(const FeedForward& ff, std::span<const Raw> z, const FxFormat& fmt) {
  if (const auto* s = std::get_if<StandardFF>(&ff)) return standard_apply(*s, z, fmt);
  if (const auto* moe = std::get_if<MoEFF>(&ff)) {
    return standard_apply(moe->experts[moe_route(*moe, z, fmt)], z, fmt);
  }
  return std::vector<Raw>(z.size(), 0);
}

namespace {

// Attention context for the listed positions, merged back to width m.
void attention_residual(const Layer& layer, Hidden& h, Mask mask, const FxFormat& fmt,
                        std::size_t first) {
  if (layer.heads.empty()) return;
  const std::size_t n = h.size();
  std::vector<Hidden> contexts;
  for (const auto& head : layer.heads) {
    Hidden q(n), k(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      k[i] = head.key.apply(h[i], fmt, "attention key");
      v[i] = head.value.apply(h[i], fmt, "attention value");
      if (i >= first) q[i] = head.query.apply(h[i], fmt, "attention query");
    }
    Hidden ctx(n);
    for (std::size_t i = first; i < n; ++i) ctx[i] = saturated_attention_at(i, q, k, v, mask, fmt);
    contexts.push_back(std::move(ctx));
  }
  std::vector<Raw> concat;
  for (std::size_t i = first; i < n; ++i) {
    concat.clear();
    for (const auto& ctx : contexts) concat.insert(concat.end(), ctx[i].begin(), ctx[i].end());
    const auto delta = layer.merge.apply(concat, fmt, "attention merge");
    for (std::size_t c = 0; c < delta.size(); ++c) h[i][c] = fxp::add(h[i][c], delta[c], fmt, "attention residual");
  }
}

void ff_residual(const Layer& layer, Hidden& h, const FxFormat& fmt, std::size_t first) {
  if (std::holds_alternative<std::monostate>(layer.ff)) return;
  for (std::size_t i = first; i < h.size(); ++i) {
    const auto delta = ff_apply(layer.ff, h[i], fmt);
    for (std::size_t c = 0; c < delta.size(); ++c) h[i][c] = fxp::add(h[i][c], delta[c], fmt, "ff residual");
  }
}

}  // namespace

void layer_forward(const Layer& layer, Hidden& h, Mask mask, const FxFormat& fmt) {
  attention_residual(layer, h, mask, fmt, 0);
  ff_residual(layer, h, fmt, 0);
}

int decode(const TransformerProgram& prog, std::span<const Raw> h) {
  const auto logits = prog.output_proj.apply(h, prog.fmt, "output projection");
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

int vocab_index(const TransformerProgram& prog, const std::string& token) {
  auto it = std::find(prog.vocab.begin(), prog.vocab.end(), token);
  if (it == prog.vocab.end()) throw Error(ErrorCode::kOutOfRange, "token '" + token + "' not in the vocabulary");
  return static_cast<int>(it - prog.vocab.begin());
}

namespace {

void check_tokens(const TransformerProgram& prog, std::span<const int> x) {
  for (auto t : x) {
    if (t < 0 || static_cast<std::size_t>(t) >= prog.vocab.size()) {
      throw Error(ErrorCode::kOutOfRange, "token index " + std::to_string(t) + " outside the vocabulary");
    }
  }
}

std::vector<int> last_tokens(std::span<const int> seq, std::size_t m) {
  const auto k = std::min(m, seq.size());
  return {seq.end() - static_cast<std::ptrdiff_t>(k), seq.end()};
}

}  // namespace

RunResult run_cot(const TransformerProgram& prog, std::span<const int> x, std::size_t budget) {
  if (prog.mode != Mode::kCot || prog.mask != Mask::kCausal) {
    throw Error(ErrorCode::kInvalidArgument, "run_cot needs a causal CoT program");
  }
  check_tokens(prog, x);
  if (budget > 0 && x.size() + budget - 1 > prog.pos_embed.positions) {
    throw Error(ErrorCode::kBudget, "budget " + std::to_string(budget) + " needs " +
                                        std::to_string(x.size() + budget - 1) +
                                        " positions, table has " +
                                        std::to_string(prog.pos_embed.positions));
  }
  const auto& fmt = prog.fmt;
  std::vector<int> seq(x.begin(), x.end());
  RunResult result;
  result.trace.mode = Mode::kCot;
  for (std::size_t step = 0; step < budget; ++step) {
    if (seq.empty()) throw Error(ErrorCode::kInvalidArgument, "run_cot: empty prompt");
    const std::size_t n = seq.size();
    Hidden h(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& we = prog.word_embed[static_cast<std::size_t>(seq[i])];
      const auto pe = prog.pos_embed.row(i + 1, 0);
      h[i].resize(prog.embed_dim);
      for (std::size_t c = 0; c < prog.embed_dim; ++c) h[i][c] = fxp::add(we[c], pe[c], fmt, "embedding");
    }
    // Under a causal mask only the last position reaches the decoded token,
    // so the final layer is evaluated there alone.
    for (std::size_t l = 0; l < prog.layers.size(); ++l) {
      const std::size_t first = l + 1 == prog.layers.size() ? n - 1 : 0;
      attention_residual(prog.layers[l], h, prog.mask, fmt, first);
      ff_residual(prog.layers[l], h, fmt, first);
    }
    const int tok = decode(prog, h[n - 1]);
    seq.push_back(tok);
    result.trace.tokens.push_back(tok);
  }
  result.trace.steps = budget;
  result.answer = last_tokens(seq, prog.answer_length);
  return result;
}

RunResult run_program(const TransformerProgram& prog, std::span<const int> x, std::optional<std::size_t> budget) {
  const std::size_t b = budget.value_or(prog.declared_budget);
  if (b < prog.declared_budget) {
    throw Error(ErrorCode::kBudgetTooSmall, "budget " + std::to_string(b) + " is below the required " +
                                                std::to_string(prog.declared_budget) +
                                                (prog.mode == Mode::kCot ? " steps" : " loops"));
  }
  if (prog.mode == Mode::kCot) return run_cot(prog, x, b);
  return run_looped(prog, x, b, false);
}

RunResult run_looped(const TransformerProgram& prog, std::span<const int> x, std::size_t loops,
                     bool record_snapshots) {
  if (prog.mode != Mode::kLooped || prog.mask != Mask::kFull) {
    throw Error(ErrorCode::kInvalidArgument, "run_looped needs a full-mask looped program");
  }
  check_tokens(prog, x);
  if (x.size() != prog.pos_embed.positions) {
    throw Error(ErrorCode::kInvalidArgument, "looped program built for " +
                                                 std::to_string(prog.pos_embed.positions) +
                                                 " positions, got " + std::to_string(x.size()));
  }
  if (loops > prog.pos_embed.loops) {
    throw Error(ErrorCode::kBudget, "loop count " + std::to_string(loops) +
                                        " exceeds positional table (" +
                                        std::to_string(prog.pos_embed.loops) + " rows)");
  }
  const auto& fmt = prog.fmt;
  const std::size_t n = x.size();
  Hidden h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = prog.word_embed[static_cast<std::size_t>(x[i])];

  RunResult result;
  result.trace.mode = Mode::kLooped;
  for (std::size_t k = 0; k < loops; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto pe = prog.pos_embed.row(i + 1, k);
      for (std::size_t c = 0; c < prog.embed_dim; ++c) h[i][c] = fxp::add(h[i][c], pe[c], fmt, "loop positional");
    }
    for (const auto& layer : prog.layers) layer_forward(layer, h, prog.mask, fmt);
    if (record_snapshots) result.trace.snapshots.push_back(h);
  }
  result.trace.steps = loops;
  std::vector<int> decoded;
  decoded.reserve(n);
  for (std::size_t i = 0; i < n; ++i) decoded.push_back(decode(prog, h[i]));
  result.answer = last_tokens(decoded, prog.answer_length);
  return result;
}

}  // namespace cotloop::tf
