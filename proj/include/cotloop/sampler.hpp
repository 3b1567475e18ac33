// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Simulated weak CoT oracle, median self-consistency, autoregressive and
// rejection sampling, and counting from the sampler.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cotloop/relations.hpp"
#include "cotloop/rng.hpp"

namespace cotloop::sampler {

using rel::RelationPtr;
using rel::Token;
using rel::Word;

enum class FailureMode { kUniformGarbage, kAntipodal, kArgmaxFlip };

const char* failure_mode_name(FailureMode m);
FailureMode parse_failure_mode(const std::string& s);

struct WeakOracleConfig {
  double gamma = 0.25;
  // Cross-entropy budget per token. Zero is accepted and means exact good
  // estimates.
  double alpha = 0.01;
  FailureMode failure_mode = FailureMode::kUniformGarbage;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Provenance { kRaw, kMedian };

struct ConditionalEstimate {
  std::vector<double> probs;
  Provenance provenance = Provenance::kRaw;
  bool dead_end = false;
  bool good = false;  // raw draws only
};

double kl_divergence(std::span<const double> p, std::span<const double> q);

// Largest lambda in [0, 1] with KL(p || (1 - lambda) p + lambda u) <= alpha.
double mixing_weight(std::span<const double> p, double alpha);

// The configured failure distribution for a true conditional p (uniform if p
// carries no mass).
std::vector<double> failure_distribution(FailureMode mode, std::span<const double> p, Rng& rng);

// One oracle call given the exact conditional.
ConditionalEstimate weak_oracle_from(const WeakOracleConfig& cfg, const rel::Conditional& truth, Rng& rng);

ConditionalEstimate weak_oracle_sample(const WeakOracleConfig& cfg, const RelationPtr& x,
                                       std::span<const Token> prefix, Rng& rng);

std::size_t required_T(double gamma, double delta, std::size_t vocab_size);

// Coordinate-wise lower median, renormalized.
ConditionalEstimate self_consistency_median(std::span<const ConditionalEstimate> estimates);

// The per-prefix median conditional pi* with its oracle randomness fixed by
// (seed, prefix). This makes q(y|x) a well-defined distribution that can be
// enumerated exactly. Not thread-safe.
class MedianModel {
 public:
  MedianModel(WeakOracleConfig cfg, RelationPtr x, double delta,
              std::size_t cap = rel::kDefaultEnumerationCap);

  const WeakOracleConfig& config() const { return cfg_; }
  const RelationPtr& relation() const { return x_; }
  std::size_t per_token_T() const { return T_; }
  double delta() const { return delta_; }
  std::size_t length() const { return x_->solution_length(); }
  std::size_t alphabet() const { return x_->alphabet_size(); }

  const rel::Conditional& truth(std::span<const Token> prefix) const;
  const ConditionalEstimate& median(std::span<const Token> prefix) const;
  // q(y | x) = prod_i pi*(y_i | y_<i); zero if y passes through a dead end.
  double q(std::span<const Token> y) const;

  std::size_t oracle_calls() const { return calls_; }

 private:
  WeakOracleConfig cfg_;
  RelationPtr x_;
  double delta_;
  std::size_t cap_;
  std::size_t T_;
  mutable std::map<Word, rel::Conditional> truth_;
  mutable std::map<Word, ConditionalEstimate> median_;
  mutable std::size_t calls_ = 0;
};

inline constexpr int kMaxDeadEndRestarts = 32;

struct AutoregressiveResult {
  Word y;
  std::vector<std::vector<double>> medians;  // pi*(. | y_<i) for each i
  double q = 0.0;
  int restarts = 0;
};

// Throws kDeadEnd after kMaxDeadEndRestarts restarts.
AutoregressiveResult autoregressive_sample(const MedianModel& model, Rng& rng);

struct CountEstimate {
  double value = 0.0;
  Word greedy_path;
  double q_path = 0.0;
};

CountEstimate count_estimate(const MedianModel& model);

enum class PSource { kOracleExact, kEstimated };

const char* p_source_name(PSource s);
PSource parse_p_source(const std::string& s);

inline constexpr double kBeta = 1.6487212707001282;  // e^{1/2}

std::size_t trial_count(double epsilon);

struct RejectionResult {
  std::optional<Word> y;
  std::size_t trials = 0;
  std::size_t dead_end_failures = 0;
  double acceptance_probability = 0.0;  // of the accepted trial
};

// Up to N trials with rng make_rng(base_seed, {trial}). p_hat is the target
// probability used by the acceptance rule. Returns no y if every trial was
// rejected.
RejectionResult rejection_trials(const MedianModel& model, double p_hat, double epsilon, std::uint64_t base_seed);

// Throws kAllRejected when no trial is accepted.
Word rejection_sample(const MedianModel& model, double p_hat, double epsilon, std::uint64_t base_seed);

// p_hat from the brute count or from count_estimate.
double target_probability(const MedianModel& model, PSource source);

double tv_distance(std::span<const double> q, std::span<const double> p);

// Upper bound for alpha from the counting schedule, 1 / (4 g^2 |R|^2).
double alpha_schedule(std::size_t g, std::uint64_t count);

// Exact law of rejection_sample's output, by enumeration of the prefix tree.
struct ExactAccepted {
  std::vector<Word> solutions;        // R(x), lexicographic
  std::vector<double> q;              // q(y) per solution
  std::vector<double> accepted;       // output probability per solution
  double bottom = 0.0;                // probability that every trial rejects
  double dead_end_mass = 0.0;         // z
  double per_trial_acceptance = 0.0;  // A
  double tv_to_uniform = 0.0;         // includes the bottom mass
};

ExactAccepted exact_accepted_distribution(const MedianModel& model, double p_hat, double epsilon);

struct SamplerReport {
  std::string relation;
  double gamma = 0.0;
  double alpha = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  std::string failure_mode;
  std::string p_source;
  std::uint64_t seed = 0;
  std::size_t samples_requested = 0;
  std::size_t accepted = 0;
  std::size_t all_rejected = 0;
  std::size_t trials_used = 0;
  std::size_t N = 0;
  std::size_t per_token_T = 0;
  std::optional<std::uint64_t> brute_count;
  std::optional<double> count_estimate;
  double p_hat = 0.0;
  double acceptance_rate = 0.0;
  std::optional<double> tv_exact;
  std::optional<double> tv_empirical;
  std::map<std::string, std::uint64_t> histogram;  // solution string -> accepted count
};

struct SampleOptions {
  std::size_t samples = 1000;
  double epsilon = 0.1;
  double delta = 0.05;
  PSource p_source = PSource::kOracleExact;
  bool exact_tv = true;
};

SamplerReport run_sampler(const WeakOracleConfig& cfg, const RelationPtr& x, const SampleOptions& opts);

std::string word_string(std::span<const Token> y);

}  // namespace cotloop::sampler
