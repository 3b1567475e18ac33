// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/relations.hpp"

#include <algorithm>
#include <cstdlib>

#include "cotloop/errors.hpp"

namespace cotloop::rel {

SatInstance::SatInstance(int vars, std::vector<std::vector<int>> clauses)
    : vars_(vars), clauses_(std::move(clauses)) {
  if (vars < 0) throw Error(ErrorCode::kInvalidArgument, "sat: negative variable count");
  for (const auto& c : clauses_) {
    if (c.empty()) unsat_ = true;
    for (int lit : c) {
      if (lit == 0 || std::abs(lit) > vars) {
        throw Error(ErrorCode::kValidation, "sat: literal " + std::to_string(lit) + " outside 1.." +
                                                std::to_string(vars));
      }
    }
  }
}

bool SatInstance::verify(std::span<const Token> y) const {
  if (unsat_ || y.size() != static_cast<std::size_t>(vars_)) return false;
  for (Token t : y) {
    if (t != 0 && t != 1) return false;
  }
  for (const auto& c : clauses_) {
    bool sat = false;
    for (int lit : c) {
      const Token v = y[static_cast<std::size_t>(std::abs(lit) - 1)];
      if ((lit > 0 && v == 1) || (lit < 0 && v == 0)) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

RelationPtr SatInstance::reduce(std::span<const Token> w) const {
  if (w.size() != 1 || vars_ == 0) throw Error(ErrorCode::kInvalidArgument, "sat: reduce takes one token");
  const Token b = w[0];
  if (b != 0 && b != 1) throw Error(ErrorCode::kOutOfRange, "sat: token is not a bit");
  std::vector<std::vector<int>> out;
  bool unsat = unsat_;
  for (const auto& c : clauses_) {
    std::vector<int> kept;
    bool satisfied = false;
    for (int lit : c) {
      if (std::abs(lit) == 1) {
        if ((lit > 0) == (b == 1)) satisfied = true;
        continue;
      }
      kept.push_back(lit > 0 ? lit - 1 : lit + 1);
    }
    if (satisfied) continue;
    if (kept.empty()) unsat = true;
    out.push_back(std::move(kept));
  }
  auto r = std::make_shared<SatInstance>(vars_ - 1, std::move(out));
  r->unsat_ = r->unsat_ || unsat;
  return r;
}

std::size_t SatInstance::size() const {
  std::size_t s = static_cast<std::size_t>(vars_);
  for (const auto& c : clauses_) s += c.size() + 1;
  return s;
}

std::string SatInstance::describe() const {
  return "sat(vars=" + std::to_string(vars_) + ", clauses=" + std::to_string(clauses_.size()) +
         (unsat_ ? ", unsat" : "") + ")";
}

PathIndepSet::PathIndepSet(int k, bool first_blocked, bool infeasible)
    : k_(k), first_blocked_(first_blocked), infeasible_(infeasible) {
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "path: negative length");
}

bool PathIndepSet::verify(std::span<const Token> y) const {
  if (infeasible_ || y.size() != static_cast<std::size_t>(k_)) return false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) return false;
    if (y[i] == 1 && i > 0 && y[i - 1] == 1) return false;
  }
  return !(first_blocked_ && k_ > 0 && y[0] == 1);
}

RelationPtr PathIndepSet::reduce(std::span<const Token> w) const {
  if (w.size() != 1 || k_ == 0) throw Error(ErrorCode::kInvalidArgument, "path: reduce takes one token");
  const Token b = w[0];
  if (b != 0 && b != 1) throw Error(ErrorCode::kOutOfRange, "path: token is not a bit");
  const bool bad = infeasible_ || (b == 1 && first_blocked_);
  return std::make_shared<PathIndepSet>(k_ - 1, b == 1, bad);
}

std::string PathIndepSet::describe() const {
  return "path(k=" + std::to_string(k_) + (first_blocked_ ? ", first blocked" : "") +
         (infeasible_ ? ", infeasible" : "") + ")";
}

RelationPtr make_sat(int vars, std::vector<std::vector<int>> clauses) {
  return std::make_shared<SatInstance>(vars, std::move(clauses));
}

RelationPtr make_path(int k) { return std::make_shared<PathIndepSet>(k); }

RelationPtr reduce_prefix(const RelationPtr& x, std::span<const Token> prefix) {
  RelationPtr cur = x;
  std::size_t i = 0;
  while (i < prefix.size()) {
    const std::size_t s = cur->chunk();
    if (s == 0 || i + s > prefix.size()) {
      throw Error(ErrorCode::kInvalidArgument, "reduce_prefix: prefix longer than the solution length");
    }
    cur = cur->reduce(prefix.subspan(i, s));
    i += s;
  }
  return cur;
}

namespace {

void check_cap(std::size_t len, std::size_t sigma, std::size_t cap) {
  if (len > cap) {
    throw Error(ErrorCode::kCapExceeded, "enumeration of length " + std::to_string(len) +
                                             " exceeds cap " + std::to_string(cap));
  }
  (void)sigma;
}

// Calls fn on every word of the given length; returns early if fn does.
template <typename Fn>
void for_each_word(std::size_t len, std::size_t sigma, Fn&& fn) {
  Word y(len, 0);
  while (true) {
    fn(static_cast<const Word&>(y));
    std::size_t i = len;
    while (i > 0) {
      --i;
      if (++y[i] < static_cast<Token>(sigma)) break;
      y[i] = 0;
      if (i == 0) return;
    }
    if (len == 0) return;
  }
}

}  // namespace

std::vector<Word> enumerate_solutions(const Relation& x, std::size_t cap) {
  const auto g = x.solution_length();
  check_cap(g, x.alphabet_size(), cap);
  std::vector<Word> out;
  for_each_word(g, x.alphabet_size(), [&](const Word& y) {
    if (x.verify(y)) out.push_back(y);
  });
  return out;
}

std::uint64_t brute_count(const Relation& x, std::size_t cap) {
  const auto g = x.solution_length();
  check_cap(g, x.alphabet_size(), cap);
  std::uint64_t count = 0;
  for_each_word(g, x.alphabet_size(), [&](const Word& y) { count += x.verify(y) ? 1 : 0; });
  return count;
}

Conditional brute_conditional(const RelationPtr& x, std::span<const Token> prefix, std::size_t cap) {
  const auto g = x->solution_length();
  check_cap(g, x->alphabet_size(), cap);
  if (prefix.size() >= g) {
    throw Error(ErrorCode::kInvalidArgument, "brute_conditional: prefix must be shorter than g(x)");
  }
  const std::size_t sigma = x->alphabet_size();
  Conditional c;
  c.counts.assign(sigma, 0);
  // Direct: complete prefix.a in every way and verify against x.
  const std::size_t rest = g - prefix.size() - 1;
  Word y(prefix.begin(), prefix.end());
  y.push_back(0);
  y.resize(g, 0);
  for (std::size_t a = 0; a < sigma; ++a) {
    y[prefix.size()] = static_cast<Token>(a);
    for_each_word(rest, sigma, [&](const Word& tail) {
      std::copy(tail.begin(), tail.end(), y.begin() + static_cast<std::ptrdiff_t>(prefix.size() + 1));
      if (x->verify(y)) ++c.counts[a];
    });
  }
  // Through psi.
  const auto reduced = reduce_prefix(x, prefix);
  for (std::size_t a = 0; a < sigma; ++a) {
    const Token t = static_cast<Token>(a);
    const auto via = brute_count(*reduced->reduce(std::span<const Token>(&t, 1)), cap);
    if (via != c.counts[a]) {
      throw Error(ErrorCode::kConsistency, "self-reduction disagrees with enumeration on " + x->describe() +
                                               ": " + std::to_string(c.counts[a]) + " vs " +
                                               std::to_string(via));
    }
  }
  std::uint64_t total = 0;
  for (auto k : c.counts) total += k;
  c.probs.assign(sigma, 0.0);
  c.dead_end = total == 0;
  if (!c.dead_end) {
    for (std::size_t a = 0; a < sigma; ++a) c.probs[a] = static_cast<double>(c.counts[a]) / static_cast<double>(total);
  }
  return c;
}

Word brute_uniform_sample(const Relation& x, Rng& rng, std::size_t cap) {
  const auto sols = enumerate_solutions(x, cap);
  if (sols.empty()) throw Error(ErrorCode::kEmptySolutionSet, x.describe() + " has no solutions");
  return sols[uniform_index(rng, sols.size())];
}

}  // namespace cotloop::rel
