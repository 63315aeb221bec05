#pragma once

#include <complex>
#include <optional>

#include <Eigen/Dense>

#include "specgal/nonlinearity.hpp"
#include "specgal/spectral_basis.hpp"

namespace specgal {

// dU/dt = -D0 (-Lap)^alpha U + V U + g_c F(U) on a periodic torus.
struct FractionalOperatorSpec {
  double alpha = 1.0;
  double d0 = 1.0;
  std::optional<PhysicalField> potential;  // V on a grid; unset means zero
  double coupling = 0.0;                   // g_c
};

struct QuadratureConfig {
  double tolerance = 1e-12;
  std::size_t max_refinements = 15;
};

// C(alpha, D) = |S^{D-1}| int_0^inf r^{D-1} / (1 + r^{2 alpha})^2 dr, the
// squared L2 norm of the resolvent symbol. Finite iff alpha > D/4; otherwise
// throws DivergentIntegralError.
double kato_rellich_constant(double alpha, int dimension, const QuadratureConfig& config = {});

struct RelativeBound {
  double a = 0.0;
  double b = 0.0;
  double r_min = 0.0;  // a(r) < 1 exactly when r > r_min
};

// a = |V| C r^{D/2 - 2 alpha}, b = |V| C r^{D/2}.
RelativeBound relative_bound(double v_norm, double alpha, int dimension, double r);
RelativeBound relative_bound_with_constant(double v_norm, double constant, double alpha,
                                           int dimension, double r);

struct KatoRellichReport {
  double alpha = 0.0;
  int dimension = 1;
  bool divergent = false;
  double constant = 0.0;  // C(alpha, D); 0 when divergent
  double v_norm = 0.0;
  double r = 0.0;
  double a = 0.0;
  double b = 0.0;
  double r_min = 0.0;
  bool admissible = false;  // a < 1 and alpha > D/4
};

// Never throws on divergence; marks the report instead.
KatoRellichReport kato_rellich_report(double v_norm, double alpha, int dimension, double r);

struct FractionalOptions {
  int local_substeps = 4;        // RK4 substeps of the nonlinear local flow
  double blowup_threshold = 1e12;
};

// Strang splitting with `steps` equal steps: half multiplier, Galerkin-projected
// local flow dU/dt = P(V U + g_c F(U)), half multiplier. Needs a periodic basis.
SpectralField evolve_fractional(const SpectralField& initial, const FractionalOperatorSpec& spec,
                                const NonlinearityProfile* profile, double t, int steps,
                                const FractionalOptions& options = {});

// 1 / (i omega - D0 k^{2 alpha}); PoleError at omega = k = 0.
std::complex<double> free_propagator(double omega, double k_mag, double d0, double alpha);

// U'' + nu U' + (-Lap)^alpha U = 0 with U(0) = f, U'(0) = g.
struct DampedWaveProblem {
  BasisPtr basis;
  double alpha = 1.0;
  double damping = 0.0;                  // constant nu, used when damping_field is unset
  std::optional<PhysicalField> damping_field;  // nu(x) >= 0 on a grid
  Eigen::VectorXd f;
  Eigen::VectorXd g;
  std::size_t truncation = 512;          // leading modes kept for the matrix functions
  std::optional<GridSpec> output_grid;   // basis default when unset
};

struct DampedWaveResult {
  PhysicalField u;
  PhysicalField phi;
  Eigen::VectorXd phi_coeffs;  // on the truncated block
  // e^{-nu t/2} phi_coeffs; set only for constant damping.
  std::optional<Eigen::VectorXd> u_coeffs;
  Eigen::VectorXd a_eigenvalues;  // spectrum of the truncated A
};

// A = (-Lap)^alpha - nu^2/4 (projected), Phi = cos(t sqrt A) f + sin(t sqrt A)/sqrt A gbar
// with gbar = nu f / 2 + g, negative eigenvalues taking the cosh/sinh branch,
// and U = exp(-nu(x) t / 2) Phi pointwise.
DampedWaveResult damped_wave_propagate(const DampedWaveProblem& problem, double t);

}  // namespace specgal
