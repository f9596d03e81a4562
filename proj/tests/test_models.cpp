#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "thermosmc/hmc.hpp"
#include "thermosmc/models.hpp"

using namespace thermosmc;

TEST(CoinToss, PosteriorModeAtTrueBiasesInConstrainedSpace) {
  const CoinTossData data{40, {20, 30}};
  // constrained-space density p^K (1-p)^(N-K) peaks at K/N; scan a fine grid
  std::array<double, 2> best{0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    double best_lp = -1e300;
    for (int i = 1; i < 10000; ++i) {
      const double p = i / 10000.0;
      std::vector<double> x{0.5, 0.5};
      x[c] = p;
      const double lp = ct_log_posterior(data, x);
      if (lp > best_lp) {
        best_lp = lp;
        best[c] = p;
      }
    }
  }
  EXPECT_NEAR(best[0], 0.5, 1e-4);
  EXPECT_NEAR(best[1], 0.75, 1e-4);
}

TEST(CoinToss, UnconstrainedStationaryPointAbsorbsJacobian) {
  const CoinTossData data{40, {20, 30}};
  const auto m = ct_model(data);
  const std::vector<double> q{logit(21.0 / 42.0), logit(31.0 / 42.0)};
  const auto g = m.gradient(q);
  EXPECT_NEAR(g[0], 0.0, 1e-12);
  EXPECT_NEAR(g[1], 0.0, 1e-12);
  // finite-difference check that it is a minimum of V, not just a zero of g
  for (double h : {1e-3, -1e-3}) {
    EXPECT_GT(m.potential(std::vector<double>{q[0] + h, q[1]}), m.potential(q));
    EXPECT_GT(m.potential(std::vector<double>{q[0], q[1] + h}), m.potential(q));
  }
}

TEST(CoinToss, NoHeadsGivesIncreasingNegLogPosterior) {
  const CoinTossData data{40, {0, 0}};
  double prev = -ct_log_posterior(data, std::vector<double>{1e-6, 1e-6});
  for (double p = 0.01; p < 1.0; p += 0.01) {
    const double v = -ct_log_posterior(data, std::vector<double>{p, p});
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(CoinToss, TrueBiasesBeatEqualBiases) {
  const CoinTossData data{40, {20, 30}};
  const auto m = ct_model(data);
  // compare at the same points both through the model and the binomial log likelihood
  const std::vector<double> at_truth{0.5, 0.75};
  const std::vector<double> at_equal{0.6, 0.6};
  EXPECT_LT(-ct_log_posterior(data, at_truth), -ct_log_posterior(data, at_equal));
  const double direct = -(20 * std::log(0.5) + 20 * std::log(0.5) + 30 * std::log(0.75) + 10 * std::log(0.25));
  EXPECT_NEAR(-ct_log_posterior(data, at_truth), direct, 1e-12);
  EXPECT_LT(m.potential(m.from_support(at_truth)), m.potential(m.from_support(at_equal)));
}

TEST(CoinToss, RejectsHeadsAboveObservations) {
  EXPECT_THROW(ct_model(CoinTossData{40, {41, 0}}), std::invalid_argument);
  EXPECT_THROW(ct_model(CoinTossData{40, {-1, 0}}), std::invalid_argument);
}

TEST(CoinTossMap, IsHeadsOverObservations) {
  const auto a = ct_map(CoinTossData{40, {20, 30}});
  EXPECT_EQ(a[0], 0.5);
  EXPECT_EQ(a[1], 0.75);
  const auto b = ct_map(CoinTossData{40, {0, 40}});
  EXPECT_EQ(b[0], 0.0);
  EXPECT_EQ(b[1], 1.0);
  const auto c = ct_map(CoinTossData{40, {10, 10}});
  EXPECT_EQ(c[0], 0.25);
  EXPECT_EQ(c[1], 0.25);
  EXPECT_THROW(ct_map(CoinTossData{0, {0, 0}}), std::invalid_argument);
}

TEST(CoinTossGenerate, SameSeedSameData) {
  const auto a = ct_generate({0.5, 0.75}, 40, 123);
  const auto b = ct_generate({0.5, 0.75}, 40, 123);
  EXPECT_EQ(a.heads, b.heads);
  EXPECT_EQ(a.n_obs, 40);
}

TEST(CoinTossGenerate, HeadCountsAverageToExpectation) {
  double s1 = 0.0, s2 = 0.0;
  const int seeds = 4000;
  for (int s = 0; s < seeds; ++s) {
    const auto d = ct_generate({0.5, 0.75}, 40, s);
    ASSERT_LE(d.heads[0], 40);
    s1 += d.heads[0];
    s2 += d.heads[1];
  }
  // sd of the mean: sqrt(10/4000) = 0.05 and sqrt(7.5/4000) = 0.043
  EXPECT_NEAR(s1 / seeds, 20.0, 0.3);
  EXPECT_NEAR(s2 / seeds, 30.0, 0.3);
}

TEST(CoinTossGenerate, DegenerateCoinAlwaysHeads) {
  for (int s = 0; s < 50; ++s) {
    const auto d = ct_generate({1.0 - 1e-12, 1.0 - 1e-12}, 40, s);
    EXPECT_EQ(d.heads[0], 40);
    EXPECT_EQ(d.heads[1], 40);
  }
}

TEST(CoinTossGenerate, RejectsBadArguments) {
  EXPECT_THROW(ct_generate({0.5, 0.5}, 0, 1), std::invalid_argument);
  EXPECT_THROW(ct_generate({0.0, 0.5}, 10, 1), std::invalid_argument);
}

TEST(IrtResponse, SymmetryPointIsHalf) {
  for (double a : {0.1, 1.0, 7.5}) EXPECT_DOUBLE_EQ(irt_response_prob(0.3, a, 0.3), 0.5);
}

TEST(IrtResponse, LogThreeGivesThreeQuarters) {
  EXPECT_NEAR(irt_response_prob(std::log(3.0) + 0.2, 1.0, 0.2), 0.75, 1e-15);
}

TEST(IrtResponse, ZeroDiscriminationIsUninformative) {
  for (double t : {-3.0, 0.0, 2.0}) EXPECT_DOUBLE_EQ(irt_response_prob(t, 0.0, 1.7), 0.5);
}

TEST(IrtResponse, ReflectionSymmetry) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int k = 0; k < 500; ++k) {
    const double t = normal(rng), a = std::abs(normal(rng)), b = normal(rng);
    EXPECT_NEAR(irt_response_prob(t, a, b) + irt_response_prob(-t, a, -b), 1.0, 1e-14);
  }
}

TEST(IrtModel, CorrectResponseFavoursHigherAbilityAtFixedPriorCost) {
  // theta = R cos(phi), b = R sin(phi) keeps theta^2 + b^2 fixed; ln a = 0.
  const IrtData data{1, 1, {1}};
  const auto m = irt_model(data);
  const double r = 1.3;
  double prev_v = 1e300;
  double prev_eta = -1.0;
  for (double phi = M_PI / 4; phi >= -M_PI / 4 - 1e-12; phi -= M_PI / 40) {
    const double theta = r * std::cos(phi), b = r * std::sin(phi);
    const double eta = theta - b;
    const double v = m.potential(std::vector<double>{theta, 0.0, b});
    // direct evaluation: softplus(-eta) + (theta^2 + b^2)/2
    EXPECT_NEAR(v, std::log1p(std::exp(-eta)) + 0.5 * r * r, 1e-12);
    EXPECT_GT(eta, prev_eta);
    EXPECT_LT(v, prev_v);
    prev_v = v;
    prev_eta = eta;
  }
}

TEST(IrtModel, GradientMatchesFiniteDifferences) {
  const IrtProblem pr = irt_synthetic(30, 8, 4);
  const auto m = irt_model(pr.data);
  ASSERT_EQ(m.dim(), 30u + 16u);
  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> q(m.dim());
  for (int k = 0; k < 10; ++k) {
    for (double& x : q) x = normal(rng);
    EXPECT_LT(check_gradient(m, q, 1e-5), 1e-5);
  }
}

TEST(IrtModel, RejectsDegenerateOrMismatchedData) {
  EXPECT_THROW(irt_model(IrtData{0, 3, {}}), std::invalid_argument);
  EXPECT_THROW(irt_model(IrtData{2, 2, {1, 0, 1}}), std::invalid_argument);
  EXPECT_THROW(irt_model(IrtData{1, 2, {1, 2}}), std::invalid_argument);
  EXPECT_THROW(irt_model(IrtData{1, 1, {1}}, IrtPriors{0.0, 1.0, 1.0}), std::invalid_argument);
}

TEST(IrtModel, SupportsAndNamesFollowLayout) {
  const auto m = irt_model(IrtData{2, 1, {1, 0}});
  ASSERT_EQ(m.dim(), 4u);
  EXPECT_EQ(m.supports()[0], Support::real);
  EXPECT_EQ(m.supports()[2], Support::positive);
  EXPECT_EQ(m.supports()[3], Support::real);
  EXPECT_EQ(m.param_names()[1], "theta1");
  EXPECT_EQ(m.param_names()[2], "a0");
  EXPECT_EQ(m.param_names()[3], "b0");
}

TEST(IrtGenerate, SymmetryPointGivesHalfTheAnswersCorrect) {
  const std::size_t persons = 200, items = 50;
  std::vector<double> theta(persons, 0.4), a(items, 1.7), b(items, 0.4);
  const auto d = irt_generate(theta, a, b, 77);
  const double rate = std::accumulate(d.responses.begin(), d.responses.end(), 0.0) / d.responses.size();
  EXPECT_NEAR(rate, 0.5, 0.025);  // 5 sd at n = 1e4
}

TEST(IrtGenerate, SaturatesForLargeDiscrimination) {
  std::vector<double> theta{1.0, 2.0, 3.0}, a{1e4, 1e4}, b{0.0, 0.5};
  const auto d = irt_generate(theta, a, b, 5);
  for (auto r : d.responses) EXPECT_EQ(r, 1);
}

TEST(IrtGenerate, SameSeedSameMatrix) {
  const auto a = irt_synthetic(40, 10, 9);
  const auto b = irt_synthetic(40, 10, 9);
  EXPECT_EQ(a.data.responses, b.data.responses);
  EXPECT_EQ(a.theta, b.theta);
}

TEST(IrtGenerate, RejectsNonPositiveDiscrimination) {
  std::vector<double> theta{0.0}, a{0.0}, b{0.0};
  EXPECT_THROW(irt_generate(theta, a, b, 1), std::invalid_argument);
}

TEST(CoinTossChain, LongRunMeanMatchesQuadrature) {
  const CoinTossData data{40, {20, 30}};
  const auto m = ct_model(data);
  const auto [e1, e2] = oracle::coin_posterior_mean(40, 20, 30, 317);
  EXPECT_NEAR(e1, 21.0 / 42.0, 1e-6);
  EXPECT_NEAR(e2, 31.0 / 42.0, 1e-6);

  KernelConfig k;
  k.step_size = 0.05;
  k.n_leapfrog = 20;
  std::mt19937_64 rng(31);
  PhasePoint pt{{0.0, 0.0}, {0.0, 0.0}};
  double s1 = 0.0, s2 = 0.0;
  const int burn = 200, steps = 20000;
  for (int t = 0; t < burn + steps; ++t) {
    pt = hmc_step(pt, m, k, 1.0, rng).point;
    if (t >= burn) {
      const auto x = m.to_support(pt.q);
      s1 += x[0];
      s2 += x[1];
    }
  }
  EXPECT_NEAR(s1 / steps, e1, 0.01);
  EXPECT_NEAR(s2 / steps, e2, 0.01);
}
