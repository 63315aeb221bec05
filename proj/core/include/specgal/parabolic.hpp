#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "specgal/nonlinearity.hpp"
#include "specgal/ode.hpp"
#include "specgal/spectral_basis.hpp"

namespace specgal {

// Time-dependent spectral coefficients of a source term. An empty function
// means zero forcing.
using Forcing = std::function<Eigen::VectorXd(double t)>;

Forcing constant_forcing(Eigen::VectorXd coeffs);

// dU/dt = -A U + Lap_cut F(U) + f on a box, A diagonal in the basis.
struct ParabolicProblem {
  BasisPtr basis;
  SpectralMultiplier a_multiplier;  // lambda -> eigenvalue of A; empty means A = -Lap
  NonlinearityProfile profile;
  Forcing forcing;
  double cutoff = std::numeric_limits<double>::infinity();
  double horizon = 1.0;
  std::optional<GridSpec> grid;  // quadrature grid; basis default when unset
};

// Exponential diffusivity on a cube: A = -(k0/2) Lap together with the
// exponential profile of the same k0.
ParabolicProblem exponential_cube_problem(BasisPtr basis, double k0, double horizon);

struct TrajectorySample {
  BasisPtr basis;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  SpectralField state(std::size_t i) const { return SpectralField(basis, states.at(i)); }
};

// Precomputed diagonal operators and the quadrature transform for one
// problem. Immutable and safe to share between threads.
class ParabolicModel {
 public:
  explicit ParabolicModel(ParabolicProblem problem);

  const ParabolicProblem& problem() const { return problem_; }
  const SpectralBasis& basis() const { return *problem_.basis; }
  const GridTransform& transform() const { return transform_; }

  // Eigenvalues of A on every mode.
  const Eigen::VectorXd& a_diagonal() const { return a_diag_; }
  // -lambda * 1[lambda <= cutoff]
  const Eigen::VectorXd& cutoff_laplacian() const { return cut_lap_; }
  // min over modes of the A eigenvalues (coercivity of A on the basis span).
  double coercivity() const { return a_diag_.minCoeff(); }
  // min(lambda_max, cutoff): the largest eigenvalue the nonlinear term sees.
  double effective_max_eigenvalue() const;

  Eigen::VectorXd forcing(double t) const;
  // Lap_cut applied to F(U) - F(0), with F evaluated on the grid.
  Eigen::VectorXd nonlinear_term(const Eigen::VectorXd& u) const;
  Eigen::VectorXd rhs(double t, const Eigen::VectorXd& u) const;
  // Quadrature of F'(U) |grad U|^2.
  double nonlinear_dissipation(const Eigen::VectorXd& u) const;

 private:
  ParabolicProblem problem_;
  GridTransform transform_;
  Eigen::VectorXd a_diag_;
  Eigen::VectorXd cut_lap_;
  double f_zero_;
};

SpectralField assemble_parabolic_rhs(const SpectralField& state, double t,
                                     const ParabolicProblem& problem);

// Records the state at every entry of `output_times` (which must start at 0
// and end at or before the horizon). With no output times, 100 equal
// intervals over [0, horizon] are used.
TrajectorySample integrate_parabolic(const ParabolicProblem& problem, const SpectralField& initial,
                                     const StepControl& control = {},
                                     std::vector<double> output_times = {});
TrajectorySample integrate_parabolic(const ParabolicModel& model, const SpectralField& initial,
                                     const StepControl& control,
                                     std::vector<double> output_times);

struct GronwallResult {
  double bound = 0.0;  // M
  double a_p = 0.0;
  int p = 1;
};

// M = sup_{0<=t<=T} exp(-a_p t) [ int_0^t p |f|^2(s) exp(a_p s) ds + |g|^2 ],
// a_p = gamma - 1/(2p). Throws InvalidParameterError when a_p <= 0.
GronwallResult gronwall_bound(double g_norm_sq, const std::function<double(double)>& f_norm_sq,
                              double gamma, int p, double horizon, int intervals = 4096);

// Smallest integer p with a_p > gamma / 2.
int default_gronwall_p(double gamma);

struct EnergySample {
  double t = 0.0;
  double norm_sq = 0.0;
  double dissipation = 0.0;            // (AU, U)
  double nonlinear_dissipation = 0.0;  // quadrature of F'(U)|grad U|^2
  double nonlinear_galerkin = 0.0;     // -(Lap_cut F(U), U), the term the ODE sees
  double forcing_work = 0.0;           // (f, U)
  double forcing_norm_sq = 0.0;
  double half_ddt_norm_sq = 0.0;       // U . dU/dt
  double inequality_residual = 0.0;    // half_ddt + a_p |U|^2 - (p/2)|f|^2
  double tolerance = 0.0;
  bool violated = false;
};

struct EnergyReport {
  std::vector<EnergySample> samples;
  // Per recorded interval: change of |U|^2/2 minus the trapezoid integral of
  // its derivative. Shrinks with the output spacing.
  std::vector<double> identity_residuals;
  double gamma = 0.0;
  int p = 1;
  double a_p = 0.0;
  double bound = 0.0;  // Gronwall M
  double sup_norm_sq = 0.0;
  bool bound_holds = true;
  std::size_t violations = 0;
};

struct AuditOptions {
  int p = 0;  // 0 selects default_gronwall_p(gamma)
  double rtol = 1e-8;
  double atol = 1e-10;
  double tolerance_factor = 10.0;
};

// Coercivity used by the audit: the A coercivity when positive, otherwise
// inf F' times the smallest eigenvalue (pure nonlinear diffusion).
double audit_coercivity(const ParabolicModel& model);

EnergyReport energy_audit(const TrajectorySample& traj, const ParabolicProblem& problem,
                          const AuditOptions& options = {});

// |U(t1) - g| at the first positive recorded time.
double initial_condition_recovery(const TrajectorySample& traj, const SpectralField& g);

struct StabilityResult {
  double max_distance = 0.0;
  double initial_distance = 0.0;
  double growth_constant = 0.0;  // C in |dU(t)| <= |dU(0)| exp(C t)
  double envelope = 0.0;         // initial_distance * exp(C T)
  // initial_distance * sqrt(lambda_max / lambda_min), from monotonicity of F in
  // the H^-1 norm; infinite with a cutoff or a zero eigenvalue.
  double contraction_envelope = std::numeric_limits<double>::infinity();
  bool identical = false;        // trajectories bitwise equal
};

// Integrates both initial conditions and compares them at every recorded
// time. C = L_F * min(lambda_max, cutoff) - coercivity(A), from
// d/dt |dU|^2 / 2 <= (-coercivity + L_F lambda_eff) |dU|^2.
StabilityResult lipschitz_stability(const ParabolicProblem& problem, const SpectralField& g1,
                                    const SpectralField& g2, const StepControl& control = {},
                                    std::vector<double> output_times = {});

}  // namespace specgal
