#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "specgal/anomalous.hpp"
#include "specgal/errors.hpp"

using namespace specgal;
using oracle::kPi;

namespace {

BasisPtr ring(int n) { return build_basis({DomainKind::kPeriodicTorus, 2 * kPi, 1, n}); }

Eigen::VectorXd smooth(std::size_t n) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = std::sin(0.7 + 1.3 * i) / (1.0 + i);
  return c;
}

}  // namespace

TEST(KatoRellich, FrozenConstants) {
  for (const auto& ref : oracle::resolvent_constants()) {
    EXPECT_NEAR(kato_rellich_constant(ref.alpha, ref.dimension), ref.value, 1e-10 * ref.value)
        << "alpha=" << ref.alpha << " D=" << ref.dimension;
  }
}

// C falls from the divergence threshold down to its minimum at alpha = D, then
// rises towards |S^{D-1}| / D as the integrand tends to the indicator of r < 1.
TEST(KatoRellich, ShapeInAlpha) {
  const double surface[] = {2.0, 2.0 * kPi, 4.0 * kPi};
  for (int d = 1; d <= 3; ++d) {
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha = d / 4.0 + 0.05; alpha <= d; alpha += 0.05) {
      const double c = kato_rellich_constant(alpha, d);
      EXPECT_LT(c, prev) << "alpha=" << alpha << " D=" << d;
      prev = c;
    }
    prev = kato_rellich_constant(d, d);
    for (double alpha = d + 0.25; alpha < d + 8.0; alpha += 0.25) {
      const double c = kato_rellich_constant(alpha, d);
      EXPECT_GT(c, prev) << "alpha=" << alpha << " D=" << d;
      EXPECT_LT(c, surface[d - 1] / d);
      prev = c;
    }
  }
  EXPECT_NEAR(kato_rellich_constant(2.0, 2), kPi * kPi / 4, 1e-12);
  EXPECT_NEAR(kato_rellich_constant(3.0, 3), kPi * kPi / 3, 1e-12);
}

TEST(KatoRellich, DivergentAtOrBelowThreshold) {
  EXPECT_THROW(kato_rellich_constant(0.75, 3), DivergentIntegralError);
  EXPECT_THROW(kato_rellich_constant(0.5, 3), DivergentIntegralError);
  EXPECT_THROW(kato_rellich_constant(0.5, 2), DivergentIntegralError);
  EXPECT_THROW(kato_rellich_constant(0.25, 1), DivergentIntegralError);
  EXPECT_THROW(kato_rellich_constant(1.0, 4), InvalidParameterError);
  EXPECT_THROW(kato_rellich_constant(-1.0, 1), InvalidParameterError);
  const auto rep = kato_rellich_report(1.0, 0.5, 3, 10.0);
  EXPECT_TRUE(rep.divergent);
  EXPECT_FALSE(rep.admissible);
}

TEST(RelativeBound, LaplacianInThreeDimensions) {
  const double c = kPi * kPi;
  const auto rb = relative_bound(2.0, 1.0, 3, 100.0);
  EXPECT_NEAR(rb.a, 2.0 * c * std::pow(100.0, -0.5), 1e-12);
  EXPECT_NEAR(rb.b, 2.0 * c * std::pow(100.0, 1.5), 1e-6);
  const double r_min = std::pow(2.0 * c, 2.0);
  EXPECT_NEAR(rb.r_min, r_min, 1e-10 * r_min);
  EXPECT_NEAR(relative_bound(2.0, 1.0, 3, r_min).a, 1.0, 1e-10);
  EXPECT_LT(relative_bound(2.0, 1.0, 3, 2 * r_min).a, 1.0);
  EXPECT_GT(relative_bound(2.0, 1.0, 3, 0.5 * r_min).a, 1.0);
}

TEST(RelativeBound, ReportAndErrors) {
  const auto rep = kato_rellich_report(2.0, 1.0, 3, 1000.0);
  EXPECT_FALSE(rep.divergent);
  EXPECT_TRUE(rep.admissible);
  EXPECT_NEAR(rep.constant, kPi * kPi, 1e-10);
  EXPECT_FALSE(kato_rellich_report(2.0, 1.0, 3, 1.0).admissible);
  EXPECT_THROW(relative_bound(1.0, 1.0, 3, 0.0), InvalidParameterError);
  EXPECT_THROW(relative_bound(-1.0, 1.0, 3, 1.0), InvalidParameterError);
  EXPECT_DOUBLE_EQ(relative_bound(0.0, 1.0, 3, 5.0).a, 0.0);
}

TEST(FreePropagator, Values) {
  const auto g1 = free_propagator(0.0, 1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(g1.real(), -1.0);
  EXPECT_DOUBLE_EQ(g1.imag(), 0.0);
  const auto g2 = free_propagator(1.0, 0.0, 1.0, 0.75);
  EXPECT_NEAR(g2.real(), 0.0, 1e-15);
  EXPECT_NEAR(g2.imag(), -1.0, 1e-15);
  const auto g3 = free_propagator(2.0, 3.0, 0.5, 0.75);
  const double s = 0.5 * std::pow(3.0, 1.5);
  EXPECT_NEAR(std::abs(g3 - 1.0 / std::complex<double>(-s, 2.0)), 0.0, 1e-15);
  for (double w : {0.3, 1.0, 7.0}) {
    EXPECT_EQ(free_propagator(-w, 2.0, 1.0, 1.2), std::conj(free_propagator(w, 2.0, 1.0, 1.2)));
  }
  EXPECT_THROW(free_propagator(0.0, 0.0, 1.0, 1.0), PoleError);
}

TEST(Fractional, ConstantPotentialExact) {
  const auto b = ring(9);
  const double v = -0.3, alpha = 0.75, t = 1.5;
  FractionalOperatorSpec spec;
  spec.alpha = alpha;
  spec.d0 = 0.8;
  spec.potential = PhysicalField{b->default_grid(), Eigen::VectorXd::Constant(
                                                        static_cast<Eigen::Index>(b->default_grid().size()), v)};
  const SpectralField u0(b, smooth(b->size()));
  const auto u = evolve_fractional(u0, spec, nullptr, t, 3);
  for (std::size_t m = 0; m < b->size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    const double rate = -spec.d0 * std::pow(b->eigenvalue(m), alpha) + v;
    EXPECT_NEAR(u.coeffs[i], u0.coeffs[i] * std::exp(rate * t), 1e-10);
  }
}

TEST(Fractional, HeatAtAlphaOne) {
  const auto b = ring(7);
  FractionalOperatorSpec spec;
  const SpectralField u0(b, smooth(b->size()));
  const auto u = evolve_fractional(u0, spec, nullptr, 0.4, 1);
  for (std::size_t m = 0; m < b->size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    EXPECT_NEAR(u.coeffs[i], u0.coeffs[i] * std::exp(-b->eigenvalue(m) * 0.4), 1e-14);
  }
}

TEST(Fractional, NonPositivePotentialContracts) {
  const auto b = ring(9);
  const auto grid = b->default_grid();
  FractionalOperatorSpec spec;
  spec.alpha = 0.6;
  spec.potential = sample_function(grid, [](std::span<const double> x) { return -1.0 - std::cos(x[0]); });
  SpectralField u(b, smooth(b->size()));
  double prev = u.norm_squared();
  for (int k = 0; k < 10; ++k) {
    u = evolve_fractional(u, spec, nullptr, 0.1, 2);
    EXPECT_LE(u.norm_squared(), prev * (1 + 1e-12));
    prev = u.norm_squared();
  }
}

TEST(Fractional, SplittingSecondOrderWithNonlinearity) {
  const auto b = ring(9);
  FractionalOperatorSpec spec;
  spec.alpha = 0.75;
  spec.coupling = -0.5;
  spec.potential = sample_function(b->default_grid(), [](std::span<const double> x) { return 0.2 * std::sin(x[0]); });
  const auto profile = make_linear_profile(1.0);
  const SpectralField u0(b, smooth(b->size()));
  const auto ref = evolve_fractional(u0, spec, &profile, 1.0, 512);
  const double e1 = (evolve_fractional(u0, spec, &profile, 1.0, 16).coeffs - ref.coeffs).norm();
  const double e2 = (evolve_fractional(u0, spec, &profile, 1.0, 32).coeffs - ref.coeffs).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 0.4);
}

TEST(Fractional, Errors) {
  const auto d = build_basis({DomainKind::kDirichletCube, kPi, 1, 3});
  FractionalOperatorSpec spec;
  EXPECT_THROW(evolve_fractional(SpectralField::zero(d), spec, nullptr, 1.0, 1), NotApplicableError);
  const auto b = ring(3);
  EXPECT_THROW(evolve_fractional(SpectralField::zero(b), spec, nullptr, 1.0, 0), InvalidParameterError);
  spec.coupling = 1.0;
  EXPECT_THROW(evolve_fractional(SpectralField::zero(b), spec, nullptr, 1.0, 1), InvalidParameterError);
  spec.coupling = 0.0;
  spec.alpha = 0.0;
  EXPECT_THROW(evolve_fractional(SpectralField::zero(b), spec, nullptr, 1.0, 1), InvalidParameterError);
}

TEST(Fractional, BlowUpDetected) {
  const auto b = ring(3);
  FractionalOperatorSpec spec;
  spec.coupling = 50.0;
  const auto profile = make_linear_profile(1.0, {-1e300, 1e300});
  EXPECT_THROW(evolve_fractional(SpectralField::unit(b, 0, 1.0), spec, &profile, 1.0, 4), InstabilityError);
}

TEST(DampedWave, ConstantDampingMatchesOscillator) {
  const auto b = build_basis({DomainKind::kDirichletCube, kPi, 1, 5});
  DampedWaveProblem p;
  p.basis = b;
  p.alpha = 0.8;
  p.damping = 0.6;
  p.f = smooth(5);
  p.g = smooth(5).reverse();
  const double t = 2.3;
  const auto r = damped_wave_propagate(p, t);
  ASSERT_TRUE(r.u_coeffs.has_value());
  for (Eigen::Index m = 0; m < 5; ++m) {
    const double k = std::pow(b->eigenvalue(static_cast<std::size_t>(m)), p.alpha);
    EXPECT_NEAR((*r.u_coeffs)[m], oracle::damped_oscillator(k, p.damping, p.f[m], p.g[m], t), 1e-12);
  }
}

TEST(DampedWave, OverdampedBranch) {
  const auto b = build_basis({DomainKind::kDirichletCube, kPi, 1, 2});
  DampedWaveProblem p;
  p.basis = b;
  p.damping = 3.0;  // nu^2/4 = 2.25 > lambda_0 = 1
  p.f = Eigen::Vector2d(1.0, 0.5);
  p.g = Eigen::Vector2d(0.0, -0.2);
  const auto r = damped_wave_propagate(p, 1.7);
  EXPECT_LT(r.a_eigenvalues.minCoeff(), 0.0);
  for (Eigen::Index m = 0; m < 2; ++m) {
    EXPECT_NEAR((*r.u_coeffs)[m],
                oracle::damped_oscillator(b->eigenvalue(static_cast<std::size_t>(m)), 3.0, p.f[m], p.g[m], 1.7), 1e-12);
  }
}

TEST(DampedWave, ShortTimeLimit) {
  const auto b = build_basis({DomainKind::kDirichletCube, kPi, 1, 4});
  DampedWaveProblem p;
  p.basis = b;
  p.f = Eigen::VectorXd::Zero(4);
  p.g = smooth(4);
  for (double t : {1e-3, 1e-5}) {
    const auto r = damped_wave_propagate(p, t);
    EXPECT_LT((r.phi_coeffs / t - p.g).norm(), 10 * t);
  }
  const auto r0 = damped_wave_propagate(p, 0.0);
  EXPECT_EQ(r0.phi_coeffs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DampedWave, VaryingDampingSpectrumRealSorted) {
  const auto b = build_basis({DomainKind::kDirichletCube, kPi, 1, 6});
  const auto grid = b->default_grid();
  DampedWaveProblem p;
  p.basis = b;
  p.alpha = 1.0;
  p.damping_field = sample_function(grid, [](std::span<const double> x) { return 0.5 + 0.3 * std::sin(x[0]); });
  p.f = smooth(6);
  p.g = Eigen::VectorXd::Zero(6);
  const auto r = damped_wave_propagate(p, 0.5);
  EXPECT_FALSE(r.u_coeffs.has_value());
  EXPECT_TRUE(r.a_eigenvalues.allFinite());
  for (Eigen::Index i = 1; i < r.a_eigenvalues.size(); ++i) EXPECT_LE(r.a_eigenvalues[i - 1], r.a_eigenvalues[i]);
  EXPECT_TRUE(r.u.values.allFinite());
  // Eigenvalues are bracketed by lambda - max(nu)^2/4 and lambda - min(nu)^2/4.
  EXPECT_GE(r.a_eigenvalues[0], 1.0 - 0.64 / 4 - 1e-12);
  EXPECT_LE(r.a_eigenvalues[0], 1.0 - 0.04 / 4 + 1e-12);
}

TEST(DampedWave, Errors) {
  const auto b = build_basis({DomainKind::kDirichletCube, kPi, 1, 3});
  DampedWaveProblem p;
  p.basis = b;
  p.f = Eigen::VectorXd::Zero(2);
  p.g = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(damped_wave_propagate(p, 1.0), ShapeError);
  p.f = Eigen::VectorXd::Zero(3);
  p.damping = -1.0;
  EXPECT_THROW(damped_wave_propagate(p, 1.0), InvalidParameterError);
}
