// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-reducible relations and brute-force counting / sampling oracles.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cotloop/rng.hpp"

namespace cotloop::rel {

using Token = int;
using Word = std::vector<Token>;

class Relation;
using RelationPtr = std::shared_ptr<const Relation>;

// An instance x together with the relation's operations on it. Solutions are
// words over {0, ..., alphabet_size() - 1}.
class Relation {
 public:
  virtual ~Relation() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t alphabet_size() const { return 2; }
  // g(x)
  virtual std::size_t solution_length() const = 0;
  // sigma(x); every shipped relation uses 1.
  virtual std::size_t chunk() const { return solution_length() > 0 ? 1 : 0; }
  virtual bool verify(std::span<const Token> y) const = 0;
  // psi(x, w) with |w| = chunk().
  virtual RelationPtr reduce(std::span<const Token> w) const = 0;
  virtual bool is_atom() const { return solution_length() == 0; }
  // |x|, for the shrinkage invariant.
  virtual std::size_t size() const = 0;
  virtual std::string describe() const = 0;
};

// CNF over variables 1..vars, literals are +-v. psi assigns variable 1 and
// renumbers the rest down by one.
class SatInstance final : public Relation {
 public:
  SatInstance(int vars, std::vector<std::vector<int>> clauses);

  std::string kind() const override { return "sat"; }
  std::size_t solution_length() const override { return static_cast<std::size_t>(vars_); }
  bool verify(std::span<const Token> y) const override;
  RelationPtr reduce(std::span<const Token> w) const override;
  std::size_t size() const override;
  std::string describe() const override;

  int vars() const { return vars_; }
  const std::vector<std::vector<int>>& clauses() const { return clauses_; }
  bool trivially_unsat() const { return unsat_; }

 private:
  int vars_;
  std::vector<std::vector<int>> clauses_;
  bool unsat_ = false;
};

// Independent sets of the path 1-2-...-k as 0/1 strings. first_blocked
// forbids vertex 1 (its left neighbour was chosen before the reduction).
class PathIndepSet final : public Relation {
 public:
  explicit PathIndepSet(int k, bool first_blocked = false, bool infeasible = false);

  std::string kind() const override { return "path_independent_set"; }
  std::size_t solution_length() const override { return static_cast<std::size_t>(k_); }
  bool verify(std::span<const Token> y) const override;
  RelationPtr reduce(std::span<const Token> w) const override;
  std::size_t size() const override { return static_cast<std::size_t>(k_) + 1; }
  std::string describe() const override;

  int k() const { return k_; }
  bool first_blocked() const { return first_blocked_; }
  bool infeasible() const { return infeasible_; }

 private:
  int k_;
  bool first_blocked_;
  bool infeasible_;
};

RelationPtr make_sat(int vars, std::vector<std::vector<int>> clauses);
RelationPtr make_path(int k);

inline constexpr std::size_t kDefaultEnumerationCap = 24;

// psi applied chunk by chunk.
RelationPtr reduce_prefix(const RelationPtr& x, std::span<const Token> prefix);

std::vector<Word> enumerate_solutions(const Relation& x, std::size_t cap = kDefaultEnumerationCap);
std::uint64_t brute_count(const Relation& x, std::size_t cap = kDefaultEnumerationCap);

struct Conditional {
  std::vector<double> probs;          // sums to 1 unless dead_end
  std::vector<std::uint64_t> counts;  // completions of prefix . a
  bool dead_end = false;
};

// Exact next-token law of the uniform distribution on R(x) given the prefix.
// Counts are computed by filtered enumeration and again through psi; any
// disagreement throws kConsistency.
Conditional brute_conditional(const RelationPtr& x, std::span<const Token> prefix,
                              std::size_t cap = kDefaultEnumerationCap);

Word brute_uniform_sample(const Relation& x, Rng& rng, std::size_t cap = kDefaultEnumerationCap);

}  // namespace cotloop::rel
