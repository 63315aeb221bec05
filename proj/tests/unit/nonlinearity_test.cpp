#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "specgal/errors.hpp"
#include "specgal/nonlinearity.hpp"

using namespace specgal;

TEST(Exponential, ValueAndSlopeAtZero) {
  const auto p = make_exponential_profile(2.0);
  const auto v = p.eval(0.0);
  EXPECT_DOUBLE_EQ(v.F, -1.0);
  EXPECT_DOUBLE_EQ(v.dF, 2.0);
  for (double k0 : {0.5, 1.0, 3.0}) EXPECT_DOUBLE_EQ(make_exponential_profile(k0).dF(0.0), k0 / 2 + 1);
}

TEST(Exponential, LipschitzBoundsOnUnitClamp) {
  const auto p = make_exponential_profile(2.0, {-1.0, 1.0});
  const auto b = p.lipschitz_bounds();
  EXPECT_NEAR(b.lower, 1.0 + std::exp(-1.0), 1e-14);
  EXPECT_NEAR(b.upper, 1.0 + std::exp(1.0), 1e-14);
}

TEST(Exponential, RandomPairsRespectBounds) {
  const auto p = make_exponential_profile(1.0, {-3.0, 3.0});
  const auto b = p.lipschitz_bounds();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng);
    if (x == y) continue;
    const double diff = std::abs(p.F(x) - p.F(y));
    EXPECT_LE(diff, b.upper * std::abs(x - y) * (1 + 1e-12));
    if (p.clamped(x) != p.clamped(y)) {
      EXPECT_GE(diff, b.lower * std::abs(p.clamped(x) - p.clamped(y)) * (1 - 1e-12));
    }
  }
}

TEST(Clamp, OutsideValuesPinnedToEndpoint) {
  const auto p = make_exponential_profile(1.0, {-2.0, 2.0});
  EXPECT_EQ(p.F(50.0), p.F(2.0));
  EXPECT_EQ(p.F(-50.0), p.F(-2.0));
  EXPECT_EQ(p.clamped(0.5), 0.5);
  EXPECT_GT(p.dF(100.0), 0.0);
  EXPECT_THROW(make_exponential_profile(1.0, {1.0, 1.0}), ConfigurationError);
  EXPECT_THROW(make_exponential_profile(1.0, {2.0, -2.0}), ConfigurationError);
  EXPECT_THROW(p.eval(std::nan("")), NumericError);
}

TEST(Linear, SlopeEverywhere) {
  const auto p = make_linear_profile(0.5);
  EXPECT_DOUBLE_EQ(p.F(3.0) - p.F(1.0), 1.0);
  const auto b = p.lipschitz_bounds();
  EXPECT_DOUBLE_EQ(b.lower, 0.5);
  EXPECT_DOUBLE_EQ(b.upper, 0.5);
  EXPECT_THROW(make_linear_profile(0.0), ConfigurationError);
  EXPECT_THROW(make_linear_profile(-1.0), ConfigurationError);
}

TEST(RegularizedPower, SlopeFormulaAndInfimum) {
  PorousMediumParams q{1.5, 2.0, 0.7, 0.2, 1.0};
  const auto p = make_regularized_power_profile(q);
  EXPECT_NEAR(p.F(0.0), 0.0, 1e-14);
  for (double r : {0.0, 0.3, 0.9}) {
    EXPECT_NEAR(p.dF(r), q.gamma * q.c * q.k * std::pow(r * r + q.epsilon * q.epsilon, q.gamma / 2), 1e-13);
  }
  EXPECT_NEAR(p.lipschitz_bounds().lower, q.gamma * q.c * q.k * std::pow(q.epsilon, q.gamma), 1e-13);
  EXPECT_GT(p.lipschitz_bounds().lower, 0.0);
}

// F is the antiderivative of F': compare against a Richardson-extrapolated
// centred difference.
TEST(RegularizedPower, DerivativeMatchesFiniteDifference) {
  const auto p = make_regularized_power_profile({2.0, 1.0, 1.0, 0.1, 1.0});
  for (double r : {0.15, 0.4, 0.75}) {
    auto cd = [&](double h) { return (p.F(r + h) - p.F(r - h)) / (2 * h); };
    const double rich = (4 * cd(1e-3) - cd(2e-3)) / 3;
    EXPECT_NEAR(rich, p.dF(r), 1e-6 * p.dF(r));
  }
}

TEST(RegularizedPower, RejectsBadParameters) {
  EXPECT_THROW(make_regularized_power_profile({1.0, 1.0, 1.0, 0.0, 1.0}), ConfigurationError);
  EXPECT_THROW(make_regularized_power_profile({1.0, 1.0, 1.0, 0.1, 0.0}), ConfigurationError);
  EXPECT_THROW(make_regularized_power_profile({0.0, 1.0, 1.0, 0.1, 1.0}), ConfigurationError);
  EXPECT_THROW(make_regularized_power_profile({1.0, -1.0, 1.0, 0.1, 1.0}), ConfigurationError);
}

TEST(Profile, Monotone) {
  for (const auto& p : {make_exponential_profile(0.3), make_linear_profile(2.0),
                        make_regularized_power_profile({})}) {
    double prev = p.F(-25.0);
    for (int i = -249; i <= 250; ++i) {
      const double f = p.F(i * 0.1);
      EXPECT_GE(f, prev);
      prev = f;
    }
  }
}
