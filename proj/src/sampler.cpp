// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cotloop/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cotloop/errors.hpp"

namespace cotloop::sampler {

const char* failure_mode_name(FailureMode m) {
  switch (m) {
    case FailureMode::kUniformGarbage:
      return "uniform-garbage";
    case FailureMode::kAntipodal:
      return "antipodal";
    case FailureMode::kArgmaxFlip:
      return "adversarial-argmax-flip";
  }
  return "?";
}

FailureMode parse_failure_mode(const std::string& s) {
  if (s == "uniform-garbage") return FailureMode::kUniformGarbage;
  if (s == "antipodal") return FailureMode::kAntipodal;
  if (s == "adversarial-argmax-flip") return FailureMode::kArgmaxFlip;
  throw Error(ErrorCode::kParse, "unknown failure mode '" + s + "'");
}

void WeakOracleConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1/2), got " + std::to_string(gamma));
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be finite and nonnegative");
  }
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::kSupportMismatch, "kl: supports differ");
  double d = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] <= 0.0) continue;
    if (q[a] <= 0.0) return std::numeric_limits<double>::infinity();
    d += p[a] * std::log(p[a] / q[a]);
  }
  return std::max(0.0, d);
}

namespace {

std::vector<double> mix(std::span<const double> p, double lambda) {
  const double u = 1.0 / static_cast<double>(p.size());
  std::vector<double> m(p.size());
  for (std::size_t a = 0; a < p.size(); ++a) m[a] = (1.0 - lambda) * p[a] + lambda * u;
  return m;
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

std::size_t first_max(std::span<const double> p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::size_t first_min(std::span<const double> p) {
  return static_cast<std::size_t>(std::min_element(p.begin(), p.end()) - p.begin());
}

std::uint64_t fnv1a(std::span<const Token> w) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Token t : w) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(t));
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

double mixing_weight(std::span<const double> p, double alpha) {
  if (p.empty()) throw Error(ErrorCode::kInvalidArgument, "mixing_weight: empty distribution");
  // Rounding makes KL read as zero for tiny lambda; alpha = 0 means no mixing.
  if (alpha <= 0.0) return 0.0;
  const auto u = uniform(p.size());
  if (kl_divergence(p, u) <= alpha) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kl_divergence(p, mix(p, mid)) <= alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::vector<double> failure_distribution(FailureMode mode, std::span<const double> p, Rng& rng) {
  double total = 0.0;
  for (double v : p) total += v;
  const std::vector<double> base = total > 0.0 ? std::vector<double>(p.begin(), p.end()) : uniform(p.size());
  switch (mode) {
    case FailureMode::kUniformGarbage: {
      // Dirichlet(1, ..., 1) from normalized exponentials.
      std::vector<double> e(p.size());
      double s = 0.0;
      for (auto& v : e) {
        v = -std::log1p(-uniform01(rng));
        s += v;
      }
      if (s <= 0.0) return uniform(p.size());
      for (auto& v : e) v /= s;
      return e;
    }
    case FailureMode::kAntipodal: {
      std::vector<double> out(p.size(), 0.0);
      out[first_min(base)] = 1.0;
      return out;
    }
    case FailureMode::kArgmaxFlip: {
      auto out = base;
      std::swap(out[first_max(base)], out[first_min(base)]);
      return out;
    }
  }
  return base;
}

ConditionalEstimate weak_oracle_from(const WeakOracleConfig& cfg, const rel::Conditional& truth, Rng& rng) {
  ConditionalEstimate e;
  e.provenance = Provenance::kRaw;
  e.dead_end = truth.dead_end;
  const bool good = bernoulli(rng, 0.5 + cfg.gamma);
  if (good && !truth.dead_end) {
    e.good = true;
    e.probs = mix(truth.probs, mixing_weight(truth.probs, cfg.alpha));
  } else {
    e.probs = failure_distribution(cfg.failure_mode, truth.probs, rng);
  }
  return e;
}

ConditionalEstimate weak_oracle_sample(const WeakOracleConfig& cfg, const RelationPtr& x,
                                       std::span<const Token> prefix, Rng& rng) {
  cfg.validate();
  if (prefix.size() >= x->solution_length()) {
    throw Error(ErrorCode::kInvalidArgument, "weak oracle: prefix must be shorter than g(x)");
  }
  return weak_oracle_from(cfg, rel::brute_conditional(x, prefix), rng);
}

std::size_t required_T(double gamma, double delta, std::size_t vocab_size) {
  if (!(gamma > 0.0 && gamma < 0.5)) throw Error(ErrorCode::kInvalidArgument, "required_T: gamma outside (0, 1/2)");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::kInvalidArgument, "required_T: delta outside (0, 1)");
  if (vocab_size == 0) throw Error(ErrorCode::kInvalidArgument, "required_T: empty vocabulary");
  const double bound = 2.0 / (gamma * gamma) * std::log(static_cast<double>(vocab_size) / delta);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bound)));
}

ConditionalEstimate self_consistency_median(std::span<const ConditionalEstimate> estimates) {
  if (estimates.empty()) throw Error(ErrorCode::kInvalidArgument, "median of zero estimates");
  const std::size_t sigma = estimates.front().probs.size();
  ConditionalEstimate out;
  out.provenance = Provenance::kMedian;
  out.probs.assign(sigma, 0.0);
  std::vector<double> col(estimates.size());
  for (const auto& e : estimates) {
    if (e.probs.size() != sigma) throw Error(ErrorCode::kSupportMismatch, "median: estimates over different alphabets");
    out.dead_end = out.dead_end || e.dead_end;
  }
  for (std::size_t a = 0; a < sigma; ++a) {
    for (std::size_t t = 0; t < estimates.size(); ++t) col[t] = estimates[t].probs[a];
    const std::size_t mid = (estimates.size() - 1) / 2;
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid), col.end());
    out.probs[a] = col[mid];
  }
  double total = 0.0;
  for (double v : out.probs) total += v;
  if (total <= 0.0) {
    out.probs = uniform(sigma);
  } else {
    for (auto& v : out.probs) v /= total;
  }
  return out;
}

MedianModel::MedianModel(WeakOracleConfig cfg, RelationPtr x, double delta, std::size_t cap)
    : cfg_(cfg), x_(std::move(x)), delta_(delta), cap_(cap) {
  cfg_.validate();
  if (!x_) throw Error(ErrorCode::kInvalidArgument, "median model: null relation");
  const std::size_t g = std::max<std::size_t>(1, x_->solution_length());
  T_ = required_T(cfg_.gamma, delta / static_cast<double>(g), x_->alphabet_size());
}

const rel::Conditional& MedianModel::truth(std::span<const Token> prefix) const {
  Word key(prefix.begin(), prefix.end());
  auto it = truth_.find(key);
  if (it != truth_.end()) return it->second;
  return truth_.emplace(std::move(key), rel::brute_conditional(x_, prefix, cap_)).first->second;
}

const ConditionalEstimate& MedianModel::median(std::span<const Token> prefix) const {
  Word key(prefix.begin(), prefix.end());
  auto it = median_.find(key);
  if (it != median_.end()) return it->second;
  const auto& p = truth(prefix);
  auto rng = make_rng(cfg_.seed, {0x6d, prefix.size(), fnv1a(prefix)});
  std::vector<ConditionalEstimate> draws;
  draws.reserve(T_);
  for (std::size_t t = 0; t < T_; ++t) draws.push_back(weak_oracle_from(cfg_, p, rng));
  calls_ += T_;
  auto m = self_consistency_median(draws);
  m.dead_end = p.dead_end;
  return median_.emplace(std::move(key), std::move(m)).first->second;
}

double MedianModel::q(std::span<const Token> y) const {
  if (y.size() != length()) return 0.0;
  double q = 1.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto prefix = y.first(i);
    if (truth(prefix).dead_end) return 0.0;
    const auto& m = median(prefix);
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= m.probs.size()) return 0.0;
    q *= m.probs[static_cast<std::size_t>(y[i])];
  }
  return q;
}

namespace {

std::size_t draw_token(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    last = a;
    cum += probs[a];
    if (u < cum) return a;
  }
  return last;
}

}  // namespace

AutoregressiveResult autoregressive_sample(const MedianModel& model, Rng& rng) {
  const std::size_t g = model.length();
  AutoregressiveResult r;
  for (int attempt = 0;; ++attempt) {
    r.y.clear();
    r.medians.clear();
    r.q = 1.0;
    bool dead = false;
    for (std::size_t i = 0; i < g; ++i) {
      if (model.truth(r.y).dead_end) {
        dead = true;
        break;
      }
      const auto& m = model.median(r.y);
      const auto a = draw_token(m.probs, rng);
      r.medians.push_back(m.probs);
      r.q *= m.probs[a];
      r.y.push_back(static_cast<Token>(a));
    }
    if (!dead) {
      r.restarts = attempt;
      return r;
    }
    if (attempt >= kMaxDeadEndRestarts) {
      throw Error(ErrorCode::kDeadEnd, "generation hit a prefix with no completions " +
                                           std::to_string(kMaxDeadEndRestarts + 1) + " times");
    }
  }
}

CountEstimate count_estimate(const MedianModel& model) {
  CountEstimate c;
  c.value = 1.0;
  c.q_path = 1.0;
  for (std::size_t i = 0; i < model.length(); ++i) {
    if (model.truth(c.greedy_path).dead_end) {
      throw Error(ErrorCode::kZeroPath, "greedy path entered a prefix with no completions at position " +
                                            std::to_string(i + 1));
    }
    const auto& m = model.median(c.greedy_path);
    const auto a = first_max(m.probs);
    if (!(m.probs[a] > 0.0)) throw Error(ErrorCode::kZeroPath, "zero median mass on the greedy path");
    c.value /= m.probs[a];
    c.q_path *= m.probs[a];
    c.greedy_path.push_back(static_cast<Token>(a));
  }
  return c;
}

const char* p_source_name(PSource s) { return s == PSource::kOracleExact ? "oracle-exact" : "estimated"; }

PSource parse_p_source(const std::string& s) {
  if (s == "oracle-exact") return PSource::kOracleExact;
  if (s == "estimated") return PSource::kEstimated;
  throw Error(ErrorCode::kParse, "unknown p source '" + s + "'");
}

std::size_t trial_count(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  return static_cast<std::size_t>(std::ceil(kBeta * kBeta * std::log(2.0 / epsilon)));
}

RejectionResult rejection_trials(const MedianModel& model, double p_hat, double epsilon, std::uint64_t base_seed) {
  const std::size_t n = trial_count(epsilon);
  RejectionResult r;
  for (std::size_t t = 0; t < n; ++t) {
    ++r.trials;
    auto rng = make_rng(base_seed, {t});
    AutoregressiveResult ar;
    try {
      ar = autoregressive_sample(model, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDeadEnd) throw;
      ++r.dead_end_failures;
      continue;
    }
    if (!model.relation()->verify(ar.y)) continue;
    const double accept = std::min(1.0, p_hat / (kBeta * ar.q));
    if (bernoulli(rng, accept)) {
      r.y = std::move(ar.y);
      r.acceptance_probability = accept;
      return r;
    }
  }
  return r;
}

Word rejection_sample(const MedianModel& model, double p_hat, double epsilon, std::uint64_t base_seed) {
  auto r = rejection_trials(model, p_hat, epsilon, base_seed);
  if (!r.y) {
    throw Error(ErrorCode::kAllRejected, "all " + std::to_string(r.trials) + " trials rejected");
  }
  return *r.y;
}

double target_probability(const MedianModel& model, PSource source) {
  if (source == PSource::kOracleExact) {
    const auto c = rel::brute_count(*model.relation());
    if (c == 0) throw Error(ErrorCode::kEmptySolutionSet, model.relation()->describe() + " has no solutions");
    return 1.0 / static_cast<double>(c);
  }
  return 1.0 / count_estimate(model).value;
}

double tv_distance(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) {
    throw Error(ErrorCode::kSupportMismatch, "tv: supports of size " + std::to_string(q.size()) + " and " +
                                                 std::to_string(p.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] >= 0.0) || !(p[i] >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "tv: negative mass");
    s += std::abs(q[i] - p[i]);
  }
  return 0.5 * s;
}

double alpha_schedule(std::size_t g, std::uint64_t count) {
  if (g == 0 || count == 0) throw Error(ErrorCode::kInvalidArgument, "alpha schedule needs g > 0 and |R| > 0");
  const double gd = static_cast<double>(g);
  const double rd = static_cast<double>(count);
  return 1.0 / (4.0 * gd * gd * rd * rd);
}

ExactAccepted exact_accepted_distribution(const MedianModel& model, double p_hat, double epsilon) {
  const auto& x = *model.relation();
  ExactAccepted out;
  out.solutions = rel::enumerate_solutions(x);
  if (out.solutions.empty()) throw Error(ErrorCode::kEmptySolutionSet, x.describe() + " has no solutions");

  std::map<Word, double> leaf_q;
  double z = 0.0;
  Word y;
  // Depth-first over prefixes with positive mass.
  auto walk = [&](auto&& self, double mass) -> void {
    if (y.size() == model.length()) {
      leaf_q[y] += mass;
      return;
    }
    if (model.truth(y).dead_end) {
      z += mass;
      return;
    }
    const auto probs = model.median(y).probs;
    for (std::size_t a = 0; a < probs.size(); ++a) {
      if (probs[a] <= 0.0) continue;
      y.push_back(static_cast<Token>(a));
      self(self, mass * probs[a]);
      y.pop_back();
    }
  };
  walk(walk, 1.0);
  out.dead_end_mass = z;

  // An attempt succeeds unless all restarts hit dead ends.
  const int attempts = kMaxDeadEndRestarts + 1;
  const double geom = z < 1.0 ? (1.0 - std::pow(z, attempts)) / (1.0 - z) : static_cast<double>(attempts);
  std::vector<double> a(out.solutions.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < out.solutions.size(); ++i) {
    auto it = leaf_q.find(out.solutions[i]);
    const double q = it == leaf_q.end() ? 0.0 : it->second;
    out.q.push_back(q);
    if (q <= 0.0) continue;
    a[i] = q * geom * std::min(1.0, p_hat / (kBeta * q));
    total += a[i];
  }
  out.per_trial_acceptance = total;
  const auto n = static_cast<double>(trial_count(epsilon));
  out.bottom = std::pow(1.0 - total, n);
  out.accepted.assign(a.size(), 0.0);
  if (total > 0.0) {
    const double scale = (1.0 - out.bottom) / total;
    for (std::size_t i = 0; i < a.size(); ++i) out.accepted[i] = a[i] * scale;
  }
  const double u = 1.0 / static_cast<double>(out.solutions.size());
  double s = out.bottom;
  for (double v : out.accepted) s += std::abs(v - u);
  out.tv_to_uniform = 0.5 * s;
  return out;
}

std::string word_string(std::span<const Token> y) {
  std::string s;
  for (Token t : y) {
    if (t >= 0 && t < 10) {
      s.push_back(static_cast<char>('0' + t));
    } else {
      if (!s.empty()) s.push_back(',');
      s += std::to_string(t);
    }
  }
  return s;
}

SamplerReport run_sampler(const WeakOracleConfig& cfg, const RelationPtr& x, const SampleOptions& opts) {
  MedianModel model(cfg, x, opts.delta);
  SamplerReport rep;
  rep.relation = x->describe();
  rep.gamma = cfg.gamma;
  rep.alpha = cfg.alpha;
  rep.delta = opts.delta;
  rep.epsilon = opts.epsilon;
  rep.failure_mode = failure_mode_name(cfg.failure_mode);
  rep.p_source = p_source_name(opts.p_source);
  rep.seed = cfg.seed;
  rep.samples_requested = opts.samples;
  rep.N = trial_count(opts.epsilon);
  rep.per_token_T = model.per_token_T();

  const auto count = rel::brute_count(*x);
  rep.brute_count = count;
  if (count == 0) throw Error(ErrorCode::kEmptySolutionSet, x->describe() + " has no solutions");
  try {
    rep.count_estimate = count_estimate(model).value;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroPath || opts.p_source == PSource::kEstimated) throw;
  }
  rep.p_hat = opts.p_source == PSource::kOracleExact ? 1.0 / static_cast<double>(count) : 1.0 / *rep.count_estimate;

  for (std::size_t s = 0; s < opts.samples; ++s) {
    const auto r = rejection_trials(model, rep.p_hat, opts.epsilon, derive_seed(cfg.seed, {0x72, s}));
    rep.trials_used += r.trials;
    if (r.y) {
      ++rep.accepted;
      ++rep.histogram[word_string(*r.y)];
    } else {
      ++rep.all_rejected;
    }
  }
  if (rep.trials_used > 0) {
    rep.acceptance_rate = static_cast<double>(rep.accepted) / static_cast<double>(rep.trials_used);
  }

  const auto sols = rel::enumerate_solutions(*x);
  if (rep.accepted > 0) {
    std::vector<double> emp;
    std::vector<double> uni(sols.size(), 1.0 / static_cast<double>(sols.size()));
    for (const auto& y : sols) {
      auto it = rep.histogram.find(word_string(y));
      const double c = it == rep.histogram.end() ? 0.0 : static_cast<double>(it->second);
      emp.push_back(c / static_cast<double>(rep.accepted));
    }
    rep.tv_empirical = tv_distance(emp, uni);
  }
  if (opts.exact_tv) rep.tv_exact = exact_accepted_distribution(model, rep.p_hat, opts.epsilon).tv_to_uniform;
  return rep;
}

}  // namespace cotloop::sampler
