#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "thermosmc/model.hpp"
#include "thermosmc/models.hpp"

using namespace thermosmc;

namespace {

ModelSpec unit_square_model() {
  CoinTossData empty;
  return ct_model(empty);
}

ModelSpec linear_model() {
  return ModelSpec(
      "linear", {Support::real}, [](std::span<const double> q) { return q[0]; },
      [](std::span<const double>, std::span<double> g) { g[0] = 1.0; }, {"x"});
}

}  // namespace

TEST(ToSupport, LogisticOfZeroIsHalf) {
  const auto m = unit_square_model();
  const std::vector<double> q{0.0, 0.0};
  const auto x = m.to_support(q);
  EXPECT_DOUBLE_EQ(x[0], 0.5);
  EXPECT_DOUBLE_EQ(x[1], 0.5);
}

TEST(ToSupport, IdentityOnRealLine) {
  const auto m = gaussian_toy(1);
  EXPECT_EQ(m.to_support(std::vector<double>{0.0})[0], 0.0);
  EXPECT_EQ(m.to_support(std::vector<double>{-3.25})[0], -3.25);
}

TEST(ToSupport, LogThreeMapsToThreeQuarters) {
  const auto m = unit_square_model();
  const auto x = m.to_support(std::vector<double>{std::log(3.0), 0.0});
  EXPECT_NEAR(x[0], 0.75, 1e-15);
  EXPECT_DOUBLE_EQ(x[1], 0.5);
}

TEST(ToSupport, RejectsNonFiniteInput) {
  const auto m = unit_square_model();
  EXPECT_THROW(m.to_support(std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 0.0}), std::invalid_argument);
  EXPECT_THROW(m.to_support(std::vector<double>{0.0, std::numeric_limits<double>::infinity()}), std::invalid_argument);
  EXPECT_THROW(m.to_support(std::vector<double>{0.0}), std::invalid_argument);
}

TEST(ToSupport, StaysStrictlyInsideUnitSquareAndIsMonotone) {
  const auto m = unit_square_model();
  double prev = 0.0;
  for (double q = -30.0; q <= 30.0; q += 0.5) {
    const auto x = m.to_support(std::vector<double>{q, q});
    EXPECT_GT(x[0], 0.0);
    EXPECT_LT(x[0], 1.0);
    EXPECT_GT(x[0], prev);
    prev = x[0];
  }
}

TEST(ToSupport, PositiveSupportUsesExp) {
  IrtData d{1, 1, {1}};
  const auto m = irt_model(d);
  const auto x = m.to_support(std::vector<double>{0.3, std::log(2.0), -0.4});
  EXPECT_DOUBLE_EQ(x[0], 0.3);
  EXPECT_NEAR(x[1], 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(x[2], -0.4);
}

TEST(Bijection, RoundTripRecoversUnconstrainedPoint) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 3.0);
  IrtData d{2, 2, {1, 0, 0, 1}};
  const auto irt = irt_model(d);
  const auto ct = unit_square_model();
  for (int k = 0; k < 200; ++k) {
    std::vector<double> q2{normal(rng), normal(rng)};
    const auto back = ct.from_support(ct.to_support(q2));
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(back[j], q2[j], 1e-10);

    std::vector<double> q6(irt.dim());
    for (double& x : q6) x = normal(rng);
    const auto back6 = irt.from_support(irt.to_support(q6));
    for (std::size_t j = 0; j < q6.size(); ++j) EXPECT_NEAR(back6[j], q6[j], 1e-10);
  }
}

TEST(Potential, GaussianToyValue) {
  const auto m = gaussian_toy(2);
  EXPECT_DOUBLE_EQ(m.potential(std::vector<double>{1.0, 0.0}), 0.5);
}

TEST(Potential, RepeatedEvaluationIsPure) {
  const auto m = ct_model({});
  const std::vector<double> q{0.37, -1.2};
  const double v1 = m.potential(q);
  const double v2 = m.potential(q);
  EXPECT_EQ(v1 - v2, 0.0);
}

TEST(Potential, FiniteFarFromOrigin) {
  const auto m = ct_model({});
  for (double q : {-700.0, -50.0, 50.0, 700.0, 1e6}) {
    EXPECT_TRUE(std::isfinite(m.potential(std::vector<double>{q, -q}))) << q;
    const auto g = m.gradient(std::vector<double>{q, -q});
    EXPECT_TRUE(std::isfinite(g[0]) && std::isfinite(g[1])) << q;
  }
}

TEST(Potential, RejectsWrongLength) {
  const auto m = ct_model({});
  EXPECT_THROW(m.potential(std::vector<double>{0.0}), std::invalid_argument);
}

TEST(Potential, ZeroObservationsLeavesPriorAndJacobianOnly) {
  // uniform prior: -ln prior is constant (0), so V = -ln|J|
  CoinTossData none;
  none.n_obs = 0;
  none.heads = {0, 0};
  const auto m = ct_model(none);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const std::vector<double> q{normal(rng), normal(rng)};
    EXPECT_NEAR(m.potential(q), -m.log_jacobian(q), 1e-12);
  }
}

TEST(Potential, ComposedConstrainedFormMatchesDirectCoinToss) {
  // Second algebraic route: build the model from the constrained log density
  // and let the generic composition add the bijection terms.
  const CoinTossData data{40, {20, 30}};
  const auto direct = ct_model(data);
  const auto composed = from_constrained(
      "ct-composed", {Support::unit_interval, Support::unit_interval},
      [data](std::span<const double> p) { return ct_log_posterior(data, p); },
      [data](std::span<const double> p, std::span<double> g) {
        for (std::size_t i = 0; i < 2; ++i) {
          g[i] = data.heads[i] / p[i] - (data.n_obs - data.heads[i]) / (1.0 - p[i]);
        }
      },
      {"p1", "p2"});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (int k = 0; k < 100; ++k) {
    const std::vector<double> q{normal(rng), normal(rng)};
    const double vd = direct.potential(q);
    const double vc = composed.potential(q);
    EXPECT_NEAR(vd - vc, 0.0, 1e-9 * std::max(1.0, std::abs(vd)));
    const auto gd = direct.gradient(q);
    const auto gc = composed.gradient(q);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(gd[j], gc[j], 1e-9 * std::max(1.0, std::abs(gd[j])));
  }
}

TEST(CheckGradient, GaussianToyIsExactToRoundoff) {
  const auto m = gaussian_toy(2);
  EXPECT_LT(check_gradient(m, std::vector<double>{1.0, 1.0}, 1e-5), 1e-8);
}

TEST(CheckGradient, CoinTossAtNormalPoints) {
  const auto m = ct_model({});
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const std::vector<double> q{normal(rng), normal(rng)};
    EXPECT_LT(check_gradient(m, q, 1e-5), 1e-5);
  }
}

TEST(CheckGradient, LinearPotentialAtMachinePrecision) {
  const auto m = linear_model();
  EXPECT_LT(check_gradient(m, std::vector<double>{0.0}, 1e-5), 1e-10);
  EXPECT_LT(check_gradient(m, std::vector<double>{0.25}, 1e-5), 1e-10);
}

TEST(CheckGradient, RejectsNonPositiveStep) {
  const auto m = gaussian_toy(1);
  EXPECT_THROW(check_gradient(m, std::vector<double>{0.0}, 0.0), std::invalid_argument);
  EXPECT_THROW(check_gradient(m, std::vector<double>{0.0}, -1e-5), std::invalid_argument);
}

TEST(CheckGradient, DetectsAWrongGradient) {
  const auto m = ModelSpec(
      "bad", {Support::real}, [](std::span<const double> q) { return q[0] * q[0]; },
      [](std::span<const double> q, std::span<double> g) { g[0] = q[0]; }, {"x"});
  EXPECT_GT(check_gradient(m, std::vector<double>{2.0}, 1e-5), 0.4);
}

TEST(GradientConsistency, AllBuiltinModelsAtHundredPoints) {
  const IrtProblem irt = irt_synthetic(12, 5, 99);
  const std::vector<ModelSpec> models{gaussian_toy(3), ct_model({}), ct_model(CoinTossData{40, {0, 40}}),
                                      irt_model(irt.data)};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& m : models) {
    std::vector<double> q(m.dim());
    for (int k = 0; k < 100; ++k) {
      for (double& x : q) x = normal(rng);
      ASSERT_LT(check_gradient(m, q, 1e-5), 1e-5) << m.name() << " point " << k;
    }
  }
}

TEST(ModelSpec, ConstructionValidatesShape) {
  auto v = [](std::span<const double>) { return 0.0; };
  auto g = [](std::span<const double>, std::span<double>) {};
  EXPECT_THROW(ModelSpec("x", {}, v, g, {}), std::invalid_argument);
  EXPECT_THROW(ModelSpec("x", {Support::real}, v, g, {"a", "b"}), std::invalid_argument);
  ModelSpec ok("x", {Support::real}, v, g, {"a"});
  EXPECT_THROW(ok.set_truth({1.0, 2.0}), std::invalid_argument);
}
