#include "specgal/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "specgal/errors.hpp"

namespace specgal {

namespace {

ParabolicProblem spatial_part(const HyperbolicProblem& p) {
  ParabolicProblem s;
  s.basis = p.basis;
  s.a_multiplier = p.a_multiplier;
  s.profile = p.profile;
  s.forcing = p.forcing;
  s.cutoff = p.cutoff;
  s.horizon = p.horizon;
  s.grid = p.grid;
  return s;
}

}  // namespace

HyperbolicModel::HyperbolicModel(HyperbolicProblem problem)
    : problem_(std::move(problem)), spatial_(spatial_part(problem_)) {
  if (!(problem_.damping >= 0.0) || !std::isfinite(problem_.damping)) {
    throw ConfigurationError("damping nu must be finite and >= 0");
  }
}

Eigen::VectorXd HyperbolicModel::rhs(double t, const Eigen::VectorXd& y) const {
  const auto n = static_cast<Eigen::Index>(modes());
  if (y.size() != 2 * n) throw ShapeError("wave state has wrong size");
  if (!y.allFinite()) throw NumericError("non-finite wave state at t=" + std::to_string(t));
  const auto u = y.head(n);
  const Eigen::VectorXd v = y.tail(n);
  Eigen::VectorXd out(2 * n);
  out.head(n) = v;
  out.tail(n) = -spatial_.a_diagonal().cwiseProduct(u) - problem_.damping * v +
                spatial_.nonlinear_term(v);
  if (problem_.forcing) out.tail(n) += spatial_.forcing(t);
  return out;
}

WaveState assemble_wave_rhs(const WaveState& state, double t, const HyperbolicProblem& problem) {
  const HyperbolicModel model(problem);
  const auto n = static_cast<Eigen::Index>(model.modes());
  if (state.position.coeffs.size() != n || state.velocity.coeffs.size() != n) {
    throw ShapeError("wave state does not match problem basis");
  }
  Eigen::VectorXd y(2 * n);
  y << state.position.coeffs, state.velocity.coeffs;
  const Eigen::VectorXd d = model.rhs(t, y);
  return {SpectralField(problem.basis, d.head(n)), SpectralField(problem.basis, d.tail(n))};
}

WaveTrajectory integrate_wave(const HyperbolicProblem& problem, const WaveState& initial,
                              const StepControl& control, std::vector<double> output_times) {
  const HyperbolicModel model(problem);
  const auto n = static_cast<Eigen::Index>(model.modes());
  if (initial.position.coeffs.size() != n || initial.velocity.coeffs.size() != n) {
    throw ShapeError("initial wave state does not match problem basis");
  }
  if (output_times.empty()) output_times = uniform_times(problem.horizon, 100);
  if (output_times.front() != 0.0) throw InvalidParameterError("output times must start at 0");

  Eigen::VectorXd y0(2 * n);
  y0 << initial.position.coeffs, initial.velocity.coeffs;
  const OdeRhs rhs = [&model](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy = model.rhs(t, y);
  };
  const OdeSolution sol = integrate_dopri5(rhs, y0, output_times, control);

  WaveTrajectory traj;
  traj.basis = problem.basis;
  traj.times = sol.times;
  traj.accepted_steps = sol.accepted_steps;
  for (const auto& y : sol.states) {
    traj.positions.emplace_back(y.head(n));
    traj.velocities.emplace_back(y.tail(n));
  }
  return traj;
}

WaveEnergyReport wave_energy_audit(const WaveTrajectory& traj, const HyperbolicProblem& problem,
                                   const AuditOptions& options) {
  if (traj.times.empty()) throw InsufficientDataError("wave energy audit of an empty trajectory");
  const HyperbolicModel model(problem);
  const ParabolicModel& sp = model.spatial();
  const double nu = problem.damping;
  const auto& a = sp.a_diagonal();

  WaveEnergyReport rep;
  bool forced = false;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const Eigen::VectorXd& u = traj.positions[i];
    const Eigen::VectorXd& v = traj.velocities[i];
    WaveEnergySample s;
    s.t = traj.times[i];
    s.velocity_norm_sq = v.squaredNorm();
    s.position_norm_sq = u.squaredNorm();
    s.potential = a.cwiseProduct(u).dot(u);
    s.energy = s.velocity_norm_sq + s.potential;
    s.damping_dissipation = nu * s.velocity_norm_sq;
    s.nonlinear_galerkin = -sp.nonlinear_term(v).dot(v);
    s.nonlinear_dissipation = sp.nonlinear_dissipation(v);
    const Eigen::VectorXd f = sp.forcing(s.t);
    s.forcing_norm_sq = f.squaredNorm();
    forced = forced || s.forcing_norm_sq > 0.0;
    if (nu > 0.0) {
      // 1/2 dE/dt + nu E + D <= nu (AU,U) + (p |f|^2 + |U'|^2 / p) / 2 with 1/(2p) = nu.
      const double half_dE = -s.damping_dissipation - s.nonlinear_galerkin + f.dot(v);
      const double p = 1.0 / (2.0 * nu);
      s.intermediate_residual = half_dE + nu * s.energy + s.nonlinear_galerkin -
                                (nu * s.potential + 0.5 * (p * s.forcing_norm_sq + s.velocity_norm_sq / p));
    }
    rep.sup_velocity_sq = std::max(rep.sup_velocity_sq, s.velocity_norm_sq);
    rep.sup_position_sq = std::max(rep.sup_position_sq, s.position_norm_sq);
    rep.samples.push_back(s);
  }

  rep.bound_applicable = nu > 0.0 || !forced;
  const double e0 = rep.samples.front().energy;
  double forcing_integral = 0.0;
  for (std::size_t i = 1; i < rep.samples.size(); ++i) {
    const auto& s0 = rep.samples[i - 1];
    const auto& s1 = rep.samples[i];
    const double dt = s1.t - s0.t;
    forcing_integral += 0.5 * dt * (s0.forcing_norm_sq + s1.forcing_norm_sq);
    rep.velocity_integral += 0.5 * dt * (s0.velocity_norm_sq + s1.velocity_norm_sq);
    if (!rep.bound_applicable) continue;
    const double f_max = std::max(s0.forcing_norm_sq, s1.forcing_norm_sq);
    const double allowed = f_max > 0.0 ? dt * f_max / (2.0 * nu) : 0.0;
    const double residual = (s1.energy - s0.energy) - allowed;
    const double tol = options.tolerance_factor * (options.atol + options.rtol * s0.energy);
    rep.increment_residuals.push_back(residual);
    const bool bad = residual > tol;
    rep.interval_violations.push_back(bad);
    if (bad) ++rep.violations;
  }

  if (rep.bound_applicable) {
    rep.bound = e0 + (forced ? forcing_integral / (2.0 * nu) : 0.0);
    const double tol = options.tolerance_factor * (options.atol + options.rtol * rep.bound);
    const double coercivity = sp.coercivity();
    rep.position_bound = coercivity > 0.0 ? rep.bound / std::min(1.0, coercivity)
                                          : std::numeric_limits<double>::infinity();
    rep.velocity_bound_holds = rep.sup_velocity_sq <= rep.bound + tol;
    rep.position_bound_holds = rep.sup_position_sq <= rep.position_bound + tol;
    rep.integral_bound_holds =
        rep.velocity_integral <= rep.bound * traj.times.back() + tol * traj.times.back();
  }
  return rep;
}

double velocity_consistency(const WaveTrajectory& traj) {
  if (traj.times.size() < 3) {
    throw InsufficientDataError("velocity consistency needs at least 3 recorded times");
  }
  const Eigen::VectorXd& u0 = traj.positions.front();
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(u0.size());
  double worst = 0.0;
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    const double dt = traj.times[i] - traj.times[i - 1];
    integral += 0.5 * dt * (traj.velocities[i - 1] + traj.velocities[i]);
    worst = std::max(worst, (traj.positions[i] - u0 - integral).norm());
  }
  return worst;
}

}  // namespace specgal
