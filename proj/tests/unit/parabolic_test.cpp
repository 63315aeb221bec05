#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "specgal/errors.hpp"
#include "specgal/parabolic.hpp"

using namespace specgal;
using oracle::kPi;

namespace {

BasisPtr cube(int d, int n) { return build_basis({DomainKind::kDirichletCube, kPi, d, n}); }

ParabolicProblem linear_problem(BasisPtr b, double a, double c, double horizon = 1.0) {
  ParabolicProblem p;
  p.basis = b;
  p.a_multiplier = [a](double l) { return a * l; };
  p.profile = make_linear_profile(c);
  p.horizon = horizon;
  return p;
}

SpectralField smooth_ic(const BasisPtr& b, double scale) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(b->size()));
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = scale * std::cos(1.0 + i) / (1.0 + b->eigenvalue(i));
  return SpectralField(b, c);
}

}  // namespace

TEST(ParabolicRhs, ZeroStateWithoutForcing) {
  const auto p = exponential_cube_problem(cube(3, 2), 1.0, 1.0);
  const auto r = assemble_parabolic_rhs(SpectralField::zero(p.basis), 0.0, p);
  EXPECT_EQ(r.coeffs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParabolicRhs, ConstantForcingAtZeroState) {
  auto p = exponential_cube_problem(cube(2, 3), 1.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.basis->size()));
  f[0] = 0.75;
  p.forcing = constant_forcing(f);
  const auto r = assemble_parabolic_rhs(SpectralField::zero(p.basis), 0.3, p);
  EXPECT_EQ(r.coeffs, f);
}

TEST(ParabolicRhs, LinearProfileIsDiagonal) {
  const auto b = cube(2, 3);
  const auto p = linear_problem(b, 0.5, 0.25);
  const auto u = smooth_ic(b, 1.0);
  const auto r = assemble_parabolic_rhs(u, 0.0, p);
  for (std::size_t m = 0; m < b->size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    EXPECT_NEAR(r.coeffs[i], -0.75 * b->eigenvalue(m) * u.coeffs[i], 1e-12);
  }
}

TEST(ParabolicRhs, BasisMismatchThrows) {
  const auto p = linear_problem(cube(1, 3), 1.0, 1.0);
  EXPECT_THROW(assemble_parabolic_rhs(SpectralField::zero(cube(1, 4)), 0.0, p), ShapeError);
}

TEST(Integrate, ZeroStaysZero) {
  const auto p = exponential_cube_problem(cube(3, 2), 1.0, 0.5);
  const auto traj = integrate_parabolic(p, SpectralField::zero(p.basis));
  for (const auto& s : traj.states) EXPECT_EQ(s.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Integrate, LinearModesDecoupleExactly) {
  const auto b = cube(1, 5);
  const auto p = linear_problem(b, 0.5, 0.5, 0.4);
  const auto g = smooth_ic(b, 2.0);
  const auto traj = integrate_parabolic(p, g, {}, uniform_times(0.4, 8));
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t m = 0; m < b->size(); ++m) {
      const auto i = static_cast<Eigen::Index>(m);
      EXPECT_NEAR(traj.states[k][i], g.coeffs[i] * std::exp(-b->eigenvalue(m) * traj.times[k]), 1e-8);
    }
  }
}

TEST(Integrate, InitialStateRecordedExactly) {
  const auto p = exponential_cube_problem(cube(2, 3), 1.0, 1.0);
  const auto g = smooth_ic(p.basis, 1.0);
  const auto traj = integrate_parabolic(p, g);
  EXPECT_EQ(traj.states.front(), g.coeffs);
  EXPECT_EQ(traj.times.size(), 101u);
}

TEST(Integrate, RejectsBadOutputTimes) {
  const auto p = exponential_cube_problem(cube(1, 3), 1.0, 1.0);
  const auto g = smooth_ic(p.basis, 1.0);
  EXPECT_THROW(integrate_parabolic(p, g, {}, {0.1, 0.5}), InvalidParameterError);
  EXPECT_THROW(integrate_parabolic(p, g, {}, {0.0, 2.0}), InvalidParameterError);
}

TEST(Integrate, CutoffAboveSpectrumIsBitwiseInert) {
  auto p = exponential_cube_problem(cube(2, 3), 1.0, 0.5);
  const auto g = smooth_ic(p.basis, 1.5);
  const auto plain = integrate_parabolic(p, g);
  p.cutoff = p.basis->max_eigenvalue();
  const auto cut = integrate_parabolic(p, g);
  ASSERT_EQ(plain.states.size(), cut.states.size());
  for (std::size_t k = 0; k < plain.states.size(); ++k) EXPECT_EQ(plain.states[k], cut.states[k]);
}

TEST(Integrate, RejectsBadProblem) {
  auto p = exponential_cube_problem(cube(1, 3), 1.0, 1.0);
  p.horizon = 0.0;
  EXPECT_THROW(ParabolicModel{p}, ConfigurationError);
  p.horizon = 1.0;
  p.cutoff = -1.0;
  EXPECT_THROW(ParabolicModel{p}, ConfigurationError);
  p.cutoff = 10.0;
  p.a_multiplier = [](double) { return -1.0; };
  EXPECT_THROW(ParabolicModel{p}, ConfigurationError);
}

TEST(Gronwall, NoForcingGivesInitialNorm) {
  const auto r = gronwall_bound(2.5, [](double) { return 0.0; }, 3.0, 1, 4.0);
  EXPECT_DOUBLE_EQ(r.bound, 2.5);
}

TEST(Gronwall, ConstantAp) {
  const auto r = gronwall_bound(1.0, [](double) { return 0.0; }, 3.0, 1, 1.0);
  EXPECT_DOUBLE_EQ(r.a_p, 2.5);
  EXPECT_EQ(r.p, 1);
  EXPECT_DOUBLE_EQ(gronwall_bound(1.0, {}, 1.0, 4, 1.0).a_p, 0.875);
}

TEST(Gronwall, ConstantForcingMatchesClosedForm) {
  for (double g2 : {0.0, 0.3, 5.0}) {
    const double f0 = 1.2, gamma = 2.0;
    const int p = 2;
    const auto r = gronwall_bound(g2, [f0](double) { return f0; }, gamma, p, 3.0);
    EXPECT_NEAR(r.bound, oracle::gronwall_constant_forcing(g2, f0, gamma - 0.25, p, 3.0), 1e-6);
  }
}

TEST(Gronwall, RejectsNonPositiveAp) {
  EXPECT_THROW(gronwall_bound(1.0, {}, 0.4, 1, 1.0), InvalidParameterError);
  EXPECT_THROW(gronwall_bound(1.0, {}, 0.5, 1, 1.0), InvalidParameterError);
  EXPECT_THROW(gronwall_bound(1.0, {}, 1.0, 0, 1.0), InvalidParameterError);
  EXPECT_THROW(gronwall_bound(1.0, {}, 0.0, 3, 1.0), InvalidParameterError);
}

TEST(Gronwall, DefaultP) {
  EXPECT_EQ(default_gronwall_p(3.0), 1);
  EXPECT_EQ(default_gronwall_p(1.0), 2);
  EXPECT_EQ(default_gronwall_p(0.3), 4);
  for (double g : {0.05, 0.3, 0.7, 1.0, 2.5}) {
    const int p = default_gronwall_p(g);
    EXPECT_GT(g - 0.5 / p, g / 2);
  }
}

TEST(EnergyAudit, ExponentialCubeHoldsBound) {
  auto p = exponential_cube_problem(cube(3, 2), 1.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.basis->size()));
  f[0] = 0.5;
  p.forcing = constant_forcing(f);
  const auto g = smooth_ic(p.basis, 1.0);
  const auto traj = integrate_parabolic(p, g);
  const auto rep = energy_audit(traj, p);
  EXPECT_TRUE(rep.bound_holds);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_LE(rep.sup_norm_sq, rep.bound);
  EXPECT_GT(rep.a_p, 0.0);
}

TEST(EnergyAudit, EmptyTrajectoryThrows) {
  const auto p = exponential_cube_problem(cube(1, 3), 1.0, 1.0);
  TrajectorySample empty;
  empty.basis = p.basis;
  EXPECT_THROW(energy_audit(empty, p), InsufficientDataError);
}

TEST(Recovery, ShrinksWithFirstStep) {
  const auto p = exponential_cube_problem(cube(2, 3), 1.0, 1.0);
  const auto g = smooth_ic(p.basis, 1.0);
  const double e1 = initial_condition_recovery(integrate_parabolic(p, g, {}, {0.0, 1e-2}), g);
  const double e2 = initial_condition_recovery(integrate_parabolic(p, g, {}, {0.0, 1e-3}), g);
  EXPECT_GT(e1, 0.0);
  EXPECT_NEAR(e1 / e2, 10.0, 1.0);
  TrajectorySample single;
  single.basis = p.basis;
  single.times = {0.0};
  single.states = {g.coeffs};
  EXPECT_THROW(initial_condition_recovery(single, g), InsufficientDataError);
}

TEST(Stability, LinearProfileContracts) {
  const auto b = cube(2, 3);
  const auto p = linear_problem(b, 0.5, 1.0);
  const auto g1 = smooth_ic(b, 1.0);
  auto g2 = g1;
  g2.coeffs[0] += 1e-3;
  const auto r = lipschitz_stability(p, g1, g2);
  EXPECT_FALSE(r.identical);
  EXPECT_DOUBLE_EQ(r.initial_distance, 1e-3);
  EXPECT_LE(r.max_distance, r.initial_distance * (1 + 1e-9));
  EXPECT_LE(r.max_distance, r.envelope * (1 + 1e-9));
}

TEST(Stability, SameInitialIsBitwiseIdentical) {
  const auto p = exponential_cube_problem(cube(3, 2), 1.0, 0.5);
  const auto g = smooth_ic(p.basis, 1.0);
  const auto r = lipschitz_stability(p, g, g);
  EXPECT_TRUE(r.identical);
  EXPECT_EQ(r.max_distance, 0.0);
}

TEST(Stability, NonlinearWithinContractionEnvelope) {
  const auto p = exponential_cube_problem(cube(2, 3), 1.0, 1.0);
  const auto g1 = smooth_ic(p.basis, 2.0);
  auto g2 = g1;
  g2.coeffs[2] -= 1e-4;
  const auto r = lipschitz_stability(p, g1, g2);
  EXPECT_TRUE(std::isfinite(r.contraction_envelope));
  EXPECT_LE(r.max_distance, r.contraction_envelope);
}
