#include <gtest/gtest.h>

#include <cmath>

#include "specgal/errors.hpp"
#include "specgal/ode.hpp"

using namespace specgal;

namespace {
const OdeRhs kDecay = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d = -y; };
}

TEST(Dopri5, ExponentialDecay) {
  const auto times = uniform_times(2.0, 10);
  const auto sol = integrate_dopri5(kDecay, Eigen::VectorXd::Ones(1), times, {});
  ASSERT_EQ(sol.states.size(), times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_EQ(sol.times[i], times[i]);
    EXPECT_NEAR(sol.states[i][0], std::exp(-times[i]), 1e-8);
  }
}

TEST(Dopri5, HarmonicOscillatorTightTolerance) {
  const OdeRhs rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) {
    d.resize(2);
    d << y[1], -y[0];
  };
  StepControl c;
  c.rtol = 1e-11;
  c.atol = 1e-13;
  const double times[] = {0.0, 10.0};
  const auto sol = integrate_dopri5(rhs, Eigen::Vector2d(1.0, 0.0), times, c);
  EXPECT_NEAR(sol.states[1][0], std::cos(10.0), 1e-9);
}

TEST(Dopri5, Deterministic) {
  const auto times = uniform_times(1.0, 7);
  const Eigen::Vector3d y0(1.0, -2.0, 0.5);
  const auto a = integrate_dopri5(kDecay, y0, times, {});
  const auto b = integrate_dopri5(kDecay, y0, times, {});
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(a.states[i], b.states[i]);
  EXPECT_EQ(a.rhs_evaluations, b.rhs_evaluations);
}

TEST(Dopri5, RejectsBadTimes) {
  const std::vector<double> none;
  EXPECT_THROW(integrate_dopri5(kDecay, Eigen::VectorXd::Ones(1), none, {}), InvalidParameterError);
  const double flat[] = {0.0, 1.0, 1.0};
  EXPECT_THROW(integrate_dopri5(kDecay, Eigen::VectorXd::Ones(1), flat, {}), InvalidParameterError);
  const double back[] = {0.0, 1.0, 0.5};
  EXPECT_THROW(integrate_dopri5(kDecay, Eigen::VectorXd::Ones(1), back, {}), InvalidParameterError);
  StepControl c;
  c.rtol = 0.0;
  const double ok[] = {0.0, 1.0};
  EXPECT_THROW(integrate_dopri5(kDecay, Eigen::VectorXd::Ones(1), ok, c), InvalidParameterError);
}

TEST(Dopri5, BlowUpReportsLastGoodTime) {
  // y' = y^2, y(0) = 1 blows up at t = 1.
  const OdeRhs rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d = y.cwiseProduct(y); };
  const double times[] = {0.0, 2.0};
  try {
    integrate_dopri5(rhs, Eigen::VectorXd::Ones(1), times, {});
    FAIL() << "expected IntegrationFailure";
  } catch (const IntegrationFailure& e) {
    EXPECT_GT(e.last_good_time(), 0.9);
    EXPECT_LE(e.last_good_time(), 1.0 + 1e-6);
  }
}

TEST(Dopri5, MaxStepsExceeded) {
  StepControl c;
  c.max_steps = 3;
  c.max_step = 1e-3;
  const double times[] = {0.0, 1.0};
  EXPECT_THROW(integrate_dopri5(kDecay, Eigen::VectorXd::Ones(1), times, c), IntegrationFailure);
}

TEST(UniformTimes, Endpoints) {
  const auto t = uniform_times(3.0, 6);
  ASSERT_EQ(t.size(), 7u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_EQ(t.back(), 3.0);
}
