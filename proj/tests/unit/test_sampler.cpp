// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "../oracles.hpp"
#include "cotloop/errors.hpp"
#include "cotloop/relations.hpp"
#include "cotloop/rng.hpp"
#include "cotloop/sampler.hpp"

namespace rel = cotloop::rel;
namespace smp = cotloop::sampler;

namespace {

smp::WeakOracleConfig config(double gamma, double alpha, std::uint64_t seed = 1,
                             smp::FailureMode mode = smp::FailureMode::kUniformGarbage) {
  smp::WeakOracleConfig c;
  c.gamma = gamma;
  c.alpha = alpha;
  c.seed = seed;
  c.failure_mode = mode;
  return c;
}

smp::ConditionalEstimate estimate(std::vector<double> p) {
  smp::ConditionalEstimate e;
  e.probs = std::move(p);
  return e;
}

double kl_by_hand(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

}  // namespace

TEST(RequiredT, Examples) {
  EXPECT_EQ(smp::required_T(0.25, 0.05, 2), 119u);
  EXPECT_EQ(static_cast<double>(smp::required_T(0.25, 0.05, 2)), std::ceil(32.0 * std::log(40.0)));
  EXPECT_LE(smp::required_T(0.25, 0.999, 1), 1u);
  EXPECT_GE(smp::required_T(0.25, 0.999, 1), 0u);
  for (std::size_t v : {2u, 4u, 8u}) {
    const auto d = smp::required_T(0.25, 0.05, 2 * v) - smp::required_T(0.25, 0.05, v);
    const double step = 32.0 * std::log(2.0);
    EXPECT_GE(static_cast<double>(d), std::floor(step));
    EXPECT_LE(static_cast<double>(d), std::ceil(step));
  }
}

TEST(TvDistance, Examples) {
  const std::vector<double> p{0.5, 0.5}, q{0.6, 0.4};
  EXPECT_DOUBLE_EQ(smp::tv_distance(p, p), 0.0);
  EXPECT_NEAR(smp::tv_distance(q, p), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(smp::tv_distance(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
  try {
    smp::tv_distance(std::vector<double>{1}, p);
    FAIL();
  } catch (const cotloop::Error& e) {
    EXPECT_EQ(e.code(), cotloop::ErrorCode::kSupportMismatch);
  }
}

TEST(MixingWeight, MeetsKlBudget) {
  const std::vector<double> p{0.7, 0.2, 0.1, 0.0};
  const std::vector<double> u(4, 0.25);
  EXPECT_DOUBLE_EQ(smp::mixing_weight(p, 0.0), 0.0);
  for (double alpha : {1e-4, 1e-3, 1e-2, 0.05}) {
    const double lam = smp::mixing_weight(p, alpha);
    std::vector<double> mix(4);
    for (int i = 0; i < 4; ++i) mix[static_cast<std::size_t>(i)] = (1 - lam) * p[static_cast<std::size_t>(i)] + lam * 0.25;
    EXPECT_LE(kl_by_hand(p, mix), alpha * (1 + 1e-9));
    EXPECT_NEAR(smp::kl_divergence(p, mix), kl_by_hand(p, mix), 1e-12);
    EXPECT_GT(kl_by_hand(p, mix), alpha * 0.99) << "lambda should be maximal";
  }
  // KL(p || u) itself is below a huge budget: full mixing allowed.
  EXPECT_DOUBLE_EQ(smp::mixing_weight(p, 10.0), 1.0);
  (void)u;
}

TEST(WeakOracle, AlphaZeroGoodBranchIsExact) {
  const auto x = rel::make_sat(2, {{1, 2}});
  const auto truth = rel::brute_conditional(x, {});
  auto rng = cotloop::make_rng(3, {});
  const auto cfg = config(0.25, 0.0);
  int good = 0;
  for (int i = 0; i < 200; ++i) {
    const auto e = smp::weak_oracle_from(cfg, truth, rng);
    if (e.good) {
      ++good;
      for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(e.probs[a], truth.probs[a], 1e-15);
    }
  }
  EXPECT_GT(good, 0);
}

TEST(WeakOracle, LimitConfigurationIsAlwaysExact) {
  const auto x = rel::make_path(5);
  auto rng = cotloop::make_rng(4, {});
  const auto cfg = config(0.5 - 1e-12, 0.0);
  const auto truth = rel::brute_conditional(x, {});
  for (int i = 0; i < 2000; ++i) {
    const auto e = smp::weak_oracle_from(cfg, truth, rng);
    ASSERT_TRUE(e.good);
    for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(e.probs[a], truth.probs[a], 1e-15);
  }
}

TEST(WeakOracle, GoodFrequencyWithinThreeSigma) {
  const auto x = rel::make_path(5);
  const auto truth = rel::brute_conditional(x, {});
  for (double gamma : {0.1, 0.25, 0.4}) {
    auto rng = cotloop::make_rng(5, {static_cast<std::uint64_t>(gamma * 100)});
    const auto cfg = config(gamma, 0.01);
    const int n = 10000;
    int good = 0;
    for (int i = 0; i < n; ++i) good += smp::weak_oracle_from(cfg, truth, rng).good ? 1 : 0;
    const double p = 0.5 + gamma;
    const double sigma = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(good) / n, p, 3 * sigma);
  }
}

TEST(WeakOracle, GoodBranchSatisfiesCrossEntropyBound) {
  const auto x = rel::make_sat(3, {{1, 2}, {-1, 3}});
  auto rng = cotloop::make_rng(6, {});
  const auto cfg = config(0.25, 0.02);
  const auto truth = rel::brute_conditional(x, {});
  for (int i = 0; i < 300; ++i) {
    const auto e = smp::weak_oracle_from(cfg, truth, rng);
    if (e.good) EXPECT_LE(kl_by_hand(truth.probs, e.probs), 0.02 * (1 + 1e-9));
  }
}

TEST(WeakOracle, FailureModes) {
  const std::vector<double> p{0.7, 0.3};
  auto rng = cotloop::make_rng(7, {});
  const auto anti = smp::failure_distribution(smp::FailureMode::kAntipodal, p, rng);
  EXPECT_EQ(anti, (std::vector<double>{0.0, 1.0}));
  const auto flip = smp::failure_distribution(smp::FailureMode::kArgmaxFlip, p, rng);
  EXPECT_EQ(flip, (std::vector<double>{0.3, 0.7}));
  for (int i = 0; i < 50; ++i) {
    const auto g = smp::failure_distribution(smp::FailureMode::kUniformGarbage, p, rng);
    EXPECT_NEAR(g[0] + g[1], 1.0, 1e-12);
    EXPECT_GE(g[0], 0.0);
  }
  for (const char* n : {"uniform-garbage", "antipodal", "adversarial-argmax-flip"}) {
    EXPECT_STREQ(smp::failure_mode_name(smp::parse_failure_mode(n)), n);
  }
  EXPECT_THROW(smp::parse_failure_mode("nope"), cotloop::Error);
}

TEST(WeakOracle, DeadEndFlagged) {
  const auto x = rel::make_path(4);
  auto rng = cotloop::make_rng(8, {});
  const rel::Word p{1, 1};
  const auto e = smp::weak_oracle_sample(config(0.25, 0.01), x, p, rng);
  EXPECT_TRUE(e.dead_end);
  EXPECT_NEAR(e.probs[0] + e.probs[1], 1.0, 1e-12);
}

TEST(WeakOracle, ConfigValidation) {
  EXPECT_THROW(config(0.0, 0.1).validate(), cotloop::Error);
  EXPECT_THROW(config(0.5, 0.1).validate(), cotloop::Error);
  EXPECT_THROW(config(0.2, -1.0).validate(), cotloop::Error);
  EXPECT_NO_THROW(config(0.2, 0.0).validate());
}

TEST(Median, SingleAndIdentical) {
  const std::vector<smp::ConditionalEstimate> one{estimate({0.2, 0.8})};
  const auto m1 = smp::self_consistency_median(one);
  EXPECT_EQ(m1.probs, (std::vector<double>{0.2, 0.8}));
  EXPECT_EQ(m1.provenance, smp::Provenance::kMedian);
  const std::vector<smp::ConditionalEstimate> same(9, estimate({0.1, 0.6, 0.3}));
  const auto m = smp::self_consistency_median(same);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(m.probs[static_cast<std::size_t>(i)], same[0].probs[static_cast<std::size_t>(i)], 1e-15);
}

TEST(Median, EvenCountTakesLowerMedian) {
  const std::vector<smp::ConditionalEstimate> e{estimate({0.1, 0.9}), estimate({0.3, 0.7}),
                                                estimate({0.5, 0.5}), estimate({0.7, 0.3})};
  // lower medians: 0.3 and 0.5, renormalized by 0.8
  const auto m = smp::self_consistency_median(e);
  EXPECT_NEAR(m.probs[0], 0.3 / 0.8, 1e-12);
  EXPECT_NEAR(m.probs[1], 0.5 / 0.8, 1e-12);
}

TEST(Median, MajorityGoodIsCloseToTruth) {
  const auto x = rel::make_path(6);
  const double alpha = 0.01;
  const auto cfg = config(0.25, alpha);
  for (const auto& prefix : std::vector<rel::Word>{{}, {0}, {1, 0}, {0, 1, 0}}) {
    const auto truth = rel::brute_conditional(x, prefix);
    const double lam = smp::mixing_weight(truth.probs, alpha);
    auto rng = cotloop::make_rng(9, {prefix.size()});
    std::vector<smp::ConditionalEstimate> es;
    for (int t = 0; t < 119; ++t) es.push_back(smp::weak_oracle_from(cfg, truth, rng));
    const auto m = smp::self_consistency_median(es);
    for (std::size_t a = 0; a < 2; ++a) EXPECT_LE(std::abs(m.probs[a] - truth.probs[a]), std::sqrt(alpha / 2) + lam);
  }
}

TEST(Autoregressive, SingletonIsReturned) {
  const auto x = rel::make_sat(3, {{1}, {-2}, {3}});
  const smp::MedianModel model(config(0.25, 0.0), x, 0.05);
  auto rng = cotloop::make_rng(10, {});
  for (int i = 0; i < 20; ++i) {
    const auto r = smp::autoregressive_sample(model, rng);
    EXPECT_EQ(r.y, (rel::Word{1, 0, 1}));
    EXPECT_NEAR(r.q, 1.0, 1e-12);
  }
}

TEST(Autoregressive, QMatchesProductOfMedians) {
  const auto x = rel::make_path(6);
  const smp::MedianModel model(config(0.25, 0.001), x, 0.05);
  auto rng = cotloop::make_rng(11, {});
  for (int i = 0; i < 50; ++i) {
    const auto r = smp::autoregressive_sample(model, rng);
    double prod = 1.0;
    for (std::size_t j = 0; j < r.y.size(); ++j) prod *= r.medians[j][static_cast<std::size_t>(r.y[j])];
    EXPECT_NEAR(r.q, prod, 1e-12);
    EXPECT_NEAR(model.q(r.y), r.q, 1e-12);
  }
}

TEST(Autoregressive, InducedQCloseToUniform) {
  const auto x = rel::make_path(6);
  const double alpha = smp::alpha_schedule(6, 21);
  const smp::MedianModel model(config(0.25, alpha, 12), x, 0.05);
  const auto sols = rel::enumerate_solutions(*x);
  std::vector<double> q, u;
  double mass = 0.0;
  for (const auto& y : sols) {
    q.push_back(model.q(y));
    u.push_back(1.0 / 21.0);
    mass += q.back();
  }
  EXPECT_LE(mass, 1.0 + 1e-12);
  // g * sqrt(alpha) scale, plus mass that leaks to dead ends
  EXPECT_LE(oracle::tv(q, u) + (1.0 - mass) / 2, 6 * std::sqrt(alpha) + 0.01);
}

TEST(Count, NoClauseSatIsExact) {
  const smp::MedianModel model(config(0.25, 0.0), rel::make_sat(3, {}), 0.05);
  const auto c = smp::count_estimate(model);
  EXPECT_DOUBLE_EQ(c.value, 8.0);
  EXPECT_NEAR(c.value * c.q_path, 1.0, 1e-12);
}

TEST(Count, SingletonIsOne) {
  const smp::MedianModel model(config(0.25, 0.0), rel::make_sat(2, {{1}, {2}}), 0.05);
  EXPECT_DOUBLE_EQ(smp::count_estimate(model).value, 1.0);
}

TEST(Count, TelescopingIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const smp::MedianModel model(config(0.25, 0.01, seed), rel::make_path(7), 0.05);
    const auto c = smp::count_estimate(model);
    EXPECT_NEAR(c.value * c.q_path, 1.0, 1e-9);
    EXPECT_NEAR(c.q_path, model.q(c.greedy_path), 1e-15);
  }
}

TEST(Count, PathEightWithinTwentyPercent) {
  const double alpha = smp::alpha_schedule(8, 55);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const smp::MedianModel model(config(0.25, alpha, seed), rel::make_path(8), 0.05);
    const double c = smp::count_estimate(model).value;
    if (c >= 0.8 * 55 && c <= 1.2 * 55) ++within;
  }
  EXPECT_GE(within, 27);
}

TEST(Rejection, TrialCount) {
  EXPECT_EQ(smp::trial_count(0.1), 9u);  // ceil(e * ln 20)
  EXPECT_EQ(smp::trial_count(0.5), static_cast<std::size_t>(std::ceil(std::exp(1.0) * std::log(4.0))));
}

TEST(Rejection, SingletonAcceptsWithOneOverBeta) {
  const auto x = rel::make_sat(2, {{1}, {-2}});
  const smp::MedianModel model(config(0.25, 0.0), x, 0.05);
  const auto r = smp::rejection_trials(model, 1.0, 0.1, 3);
  EXPECT_NEAR(r.acceptance_probability, std::exp(-0.5), 1e-12);
  const auto ex = smp::exact_accepted_distribution(model, 1.0, 0.1);
  EXPECT_NEAR(ex.per_trial_acceptance, std::exp(-0.5), 1e-12);
  EXPECT_NEAR(ex.bottom, std::pow(1 - std::exp(-0.5), 9), 1e-12);
  EXPECT_EQ(smp::rejection_sample(model, 1.0, 0.1, 4), (rel::Word{1, 0}));
}

TEST(Rejection, PathSixExactTvBelowEpsilon) {
  const auto x = rel::make_path(6);
  const smp::MedianModel model(config(0.25, smp::alpha_schedule(6, 21), 5), x, 0.05);
  const auto ex = smp::exact_accepted_distribution(model, 1.0 / 21, 0.1);
  EXPECT_LE(ex.tv_to_uniform, 0.1);
  EXPECT_GE(ex.per_trial_acceptance, 1.0 / (smp::kBeta * smp::kBeta));
  double total = ex.bottom;
  for (double a : ex.accepted) total += a;
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Rejection, AllRejectedSurfaces) {
  // p_hat far below q forces acceptance probability near zero.
  const auto x = rel::make_path(3);
  const smp::MedianModel model(config(0.25, 0.0), x, 0.05);
  try {
    for (std::uint64_t s = 0; s < 50; ++s) smp::rejection_sample(model, 1e-12, 0.5, s);
    FAIL();
  } catch (const cotloop::Error& e) {
    EXPECT_EQ(e.code(), cotloop::ErrorCode::kAllRejected);
  }
}

TEST(RunSampler, ReproducibleAndConsistent) {
  smp::SampleOptions o;
  o.samples = 300;
  const auto cfg = config(0.25, smp::alpha_schedule(6, 21), 99);
  const auto a = smp::run_sampler(cfg, rel::make_path(6), o);
  const auto b = smp::run_sampler(cfg, rel::make_path(6), o);
  EXPECT_EQ(a.histogram, b.histogram);
  EXPECT_EQ(a.accepted, 300u);
  EXPECT_EQ(a.N, 9u);
  ASSERT_TRUE(a.brute_count.has_value());
  EXPECT_EQ(*a.brute_count, 21u);
  std::uint64_t total = 0;
  for (const auto& [y, n] : a.histogram) total += n;
  EXPECT_EQ(total, a.accepted);
  EXPECT_GT(a.acceptance_rate, 0.0);
  EXPECT_LE(a.acceptance_rate, 1.0);
}

TEST(RunSampler, EstimatedModeRuns) {
  smp::SampleOptions o;
  o.samples = 200;
  o.p_source = smp::PSource::kEstimated;
  const auto r = smp::run_sampler(config(0.25, smp::alpha_schedule(6, 21), 7), rel::make_path(6), o);
  EXPECT_EQ(r.p_source, "estimated");
  ASSERT_TRUE(r.count_estimate.has_value());
  EXPECT_NEAR(r.p_hat, 1.0 / *r.count_estimate, 1e-15);
}
