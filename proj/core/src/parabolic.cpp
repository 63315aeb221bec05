#include "specgal/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "specgal/errors.hpp"

namespace specgal {

namespace {

void check_state(const Eigen::VectorXd& u, double t) {
  if (!u.allFinite()) {
    std::ostringstream os;
    os << "non-finite Galerkin state at t=" << t;
    throw NumericError(os.str());
  }
}

std::vector<double> resolve_times(std::vector<double> times, double horizon) {
  if (times.empty()) return uniform_times(horizon, 100);
  if (times.front() != 0.0) throw InvalidParameterError("output times must start at 0");
  if (times.back() > horizon * (1.0 + 1e-12)) {
    throw InvalidParameterError("output times extend past the horizon");
  }
  return times;
}

}  // namespace

Forcing constant_forcing(Eigen::VectorXd coeffs) {
  return [c = std::move(coeffs)](double) { return c; };
}

ParabolicProblem exponential_cube_problem(BasisPtr basis, double k0, double horizon) {
  ParabolicProblem p;
  p.basis = std::move(basis);
  p.profile = make_exponential_profile(k0);
  p.a_multiplier = [k0](double lambda) { return 0.5 * k0 * lambda; };
  p.horizon = horizon;
  return p;
}

// ---------------------------------------------------------------------------
// ParabolicModel

ParabolicModel::ParabolicModel(ParabolicProblem problem)
    : problem_(std::move(problem)),
      transform_(problem_.basis, problem_.grid ? *problem_.grid
                                               : (problem_.basis ? problem_.basis->default_grid()
                                                                 : GridSpec{})) {
  if (!(problem_.horizon > 0.0)) throw ConfigurationError("horizon T must be > 0");
  if (!(problem_.cutoff > 0.0)) throw ConfigurationError("cutoff Lambda must be > 0");
  const auto& lambda = problem_.basis->eigenvalues();
  const Eigen::Index n = lambda.size();
  a_diag_.resize(n);
  cut_lap_.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = problem_.a_multiplier ? problem_.a_multiplier(lambda[j]) : lambda[j];
    if (!std::isfinite(a) || a < 0.0) {
      throw ConfigurationError("A multiplier must be finite and >= 0 on every eigenvalue");
    }
    a_diag_[j] = a;
    cut_lap_[j] = lambda[j] <= problem_.cutoff ? -lambda[j] : 0.0;
  }
  f_zero_ = problem_.profile.F(0.0);
}

double ParabolicModel::effective_max_eigenvalue() const {
  double m = 0.0;
  for (Eigen::Index j = 0; j < cut_lap_.size(); ++j) m = std::max(m, -cut_lap_[j]);
  return m;
}

Eigen::VectorXd ParabolicModel::forcing(double t) const {
  if (!problem_.forcing) return Eigen::VectorXd::Zero(a_diag_.size());
  Eigen::VectorXd f = problem_.forcing(t);
  if (f.size() != a_diag_.size()) throw ShapeError("forcing coefficients do not match basis");
  return f;
}

Eigen::VectorXd ParabolicModel::nonlinear_term(const Eigen::VectorXd& u) const {
  if (!(cut_lap_.array() != 0.0).any()) return Eigen::VectorXd::Zero(u.size());
  Eigen::VectorXd values = transform_.synthesize(u);
  const auto& profile = problem_.profile;
  // F(0) is constant and annihilated by the Laplacian; removing it keeps the
  // projected field compatible with the zero boundary values.
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = profile.F(values[i]) - f_zero_;
  return cut_lap_.cwiseProduct(transform_.project(values));
}

Eigen::VectorXd ParabolicModel::rhs(double t, const Eigen::VectorXd& u) const {
  check_state(u, t);
  Eigen::VectorXd out = -a_diag_.cwiseProduct(u) + nonlinear_term(u);
  if (problem_.forcing) out += forcing(t);
  return out;
}

double ParabolicModel::nonlinear_dissipation(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd values = transform_.synthesize(u);
  Eigen::VectorXd grad_sq = Eigen::VectorXd::Zero(values.size());
  for (int a = 0; a < basis().dimension(); ++a) {
    grad_sq += transform_.synthesize_derivative(u, a).array().square().matrix();
  }
  Eigen::VectorXd integrand(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    integrand[i] = problem_.profile.dF(values[i]) * grad_sq[i];
  }
  return transform_.integrate(integrand);
}

// ---------------------------------------------------------------------------
// Operations

SpectralField assemble_parabolic_rhs(const SpectralField& state, double t,
                                     const ParabolicProblem& problem) {
  if (!state.basis || static_cast<std::size_t>(state.coeffs.size()) != problem.basis->size() ||
      state.basis->kind() != problem.basis->kind()) {
    throw ShapeError("state basis does not match problem basis");
  }
  ParabolicModel model(problem);
  return SpectralField(problem.basis, model.rhs(t, state.coeffs));
}

TrajectorySample integrate_parabolic(const ParabolicModel& model, const SpectralField& initial,
                                     const StepControl& control,
                                     std::vector<double> output_times) {
  if (static_cast<std::size_t>(initial.coeffs.size()) != model.basis().size()) {
    throw ShapeError("initial condition does not match problem basis");
  }
  const auto times = resolve_times(std::move(output_times), model.problem().horizon);
  const OdeRhs rhs = [&model](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy = model.rhs(t, y);
  };
  OdeSolution sol = integrate_dopri5(rhs, initial.coeffs, times, control);
  TrajectorySample traj;
  traj.basis = model.problem().basis;
  traj.times = std::move(sol.times);
  traj.states = std::move(sol.states);
  traj.accepted_steps = sol.accepted_steps;
  traj.rejected_steps = sol.rejected_steps;
  return traj;
}

TrajectorySample integrate_parabolic(const ParabolicProblem& problem, const SpectralField& initial,
                                     const StepControl& control,
                                     std::vector<double> output_times) {
  const ParabolicModel model(problem);
  return integrate_parabolic(model, initial, control, std::move(output_times));
}

int default_gronwall_p(double gamma) {
  if (!(gamma > 0.0)) throw InvalidParameterError("Gronwall constant needs gamma > 0");
  return static_cast<int>(std::floor(1.0 / gamma)) + 1;
}

GronwallResult gronwall_bound(double g_norm_sq, const std::function<double(double)>& f_norm_sq,
                              double gamma, int p, double horizon, int intervals) {
  if (p < 1) throw InvalidParameterError("p must be a positive integer");
  const double a_p = gamma - 1.0 / (2.0 * p);
  if (!(a_p > 0.0)) {
    std::ostringstream os;
    os << "a_p = gamma - 1/(2p) = " << a_p << " is not positive (gamma=" << gamma << ", p=" << p
       << ")";
    throw InvalidParameterError(os.str());
  }
  if (!(horizon >= 0.0)) throw InvalidParameterError("horizon must be >= 0");
  GronwallResult r{g_norm_sq, a_p, p};
  if (!f_norm_sq || horizon == 0.0) return r;

  // Composite Simpson on each sub-interval, accumulating the Duhamel integral.
  if (intervals < 2) intervals = 2;
  const double h = horizon / intervals;
  const auto integrand = [&](double s) { return p * f_norm_sq(s) * std::exp(a_p * s); };
  double integral = 0.0;
  double left = integrand(0.0);
  double sup = g_norm_sq;
  for (int i = 0; i < intervals; ++i) {
    const double t0 = i * h;
    const double t1 = (i == intervals - 1) ? horizon : t0 + h;
    const double mid = integrand(0.5 * (t0 + t1));
    const double right = integrand(t1);
    integral += (t1 - t0) / 6.0 * (left + 4.0 * mid + right);
    left = right;
    sup = std::max(sup, std::exp(-a_p * t1) * (integral + g_norm_sq));
  }
  r.bound = sup;
  return r;
}

double audit_coercivity(const ParabolicModel& model) {
  const double ga = model.coercivity();
  if (ga > 0.0) return ga;
  const double lambda_min = model.basis().min_eigenvalue();
  return model.problem().profile.lipschitz_bounds().lower * lambda_min;
}

EnergyReport energy_audit(const TrajectorySample& traj, const ParabolicProblem& problem,
                          const AuditOptions& options) {
  if (traj.times.empty()) throw InsufficientDataError("energy audit of an empty trajectory");
  const ParabolicModel model(problem);
  EnergyReport rep;
  rep.gamma = audit_coercivity(model);
  rep.p = options.p > 0 ? options.p : default_gronwall_p(rep.gamma);
  const std::function<double(double)> f_sq =
      problem.forcing ? std::function<double(double)>(
                            [&model](double t) { return model.forcing(t).squaredNorm(); })
                      : std::function<double(double)>();
  const GronwallResult gw = gronwall_bound(traj.states.front().squaredNorm(), f_sq, rep.gamma,
                                           rep.p, traj.times.back());
  rep.a_p = gw.a_p;
  rep.bound = gw.bound;

  const auto& a = model.a_diagonal();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const Eigen::VectorXd& u = traj.states[i];
    const double t = traj.times[i];
    EnergySample s;
    s.t = t;
    s.norm_sq = u.squaredNorm();
    s.dissipation = a.cwiseProduct(u).dot(u);
    s.nonlinear_galerkin = -model.nonlinear_term(u).dot(u);
    s.nonlinear_dissipation = model.nonlinear_dissipation(u);
    const Eigen::VectorXd f = model.forcing(t);
    s.forcing_work = f.dot(u);
    s.forcing_norm_sq = f.squaredNorm();
    s.half_ddt_norm_sq = -s.dissipation - s.nonlinear_galerkin + s.forcing_work;
    s.inequality_residual =
        s.half_ddt_norm_sq + rep.a_p * s.norm_sq - 0.5 * rep.p * s.forcing_norm_sq;
    const double scale = s.dissipation + std::abs(s.nonlinear_galerkin) + std::abs(s.forcing_work) +
                         rep.a_p * s.norm_sq + 0.5 * rep.p * s.forcing_norm_sq;
    s.tolerance = options.tolerance_factor * (options.atol + options.rtol * scale);
    s.violated = s.inequality_residual > s.tolerance;
    if (s.violated) ++rep.violations;
    rep.sup_norm_sq = std::max(rep.sup_norm_sq, s.norm_sq);
    rep.samples.push_back(s);
  }
  for (std::size_t i = 1; i < rep.samples.size(); ++i) {
    const auto& s0 = rep.samples[i - 1];
    const auto& s1 = rep.samples[i];
    const double change = 0.5 * (s1.norm_sq - s0.norm_sq);
    const double integral = 0.5 * (s1.t - s0.t) * (s0.half_ddt_norm_sq + s1.half_ddt_norm_sq);
    rep.identity_residuals.push_back(change - integral);
  }
  const double bound_tol = options.tolerance_factor * (options.atol + options.rtol * rep.bound);
  rep.bound_holds = rep.sup_norm_sq <= rep.bound + bound_tol;
  return rep;
}

double initial_condition_recovery(const TrajectorySample& traj, const SpectralField& g) {
  if (traj.times.size() < 2) throw InsufficientDataError("need a positive recorded time");
  if (traj.times.front() != 0.0) throw InvalidParameterError("trajectory must start at t = 0");
  if (traj.states[1].size() != g.coeffs.size()) throw ShapeError("initial condition basis mismatch");
  return (traj.states[1] - g.coeffs).norm();
}

StabilityResult lipschitz_stability(const ParabolicProblem& problem, const SpectralField& g1,
                                    const SpectralField& g2, const StepControl& control,
                                    std::vector<double> output_times) {
  if (g1.coeffs.size() != g2.coeffs.size()) throw ShapeError("initial conditions in different bases");
  const ParabolicModel model(problem);
  const auto t1 = integrate_parabolic(model, g1, control, output_times);
  const auto t2 = integrate_parabolic(model, g2, control, std::move(output_times));
  StabilityResult r;
  r.initial_distance = (g1.coeffs - g2.coeffs).norm();
  r.identical = t1.times == t2.times;
  for (std::size_t i = 0; i < t1.states.size(); ++i) {
    r.max_distance = std::max(r.max_distance, (t1.states[i] - t2.states[i]).norm());
    r.identical = r.identical && (t1.states[i].array() == t2.states[i].array()).all();
  }
  const double lf = problem.profile.lipschitz_bounds().upper;
  r.growth_constant = lf * model.effective_max_eigenvalue() - model.coercivity();
  r.envelope = r.initial_distance * std::exp(r.growth_constant * t1.times.back());
  // With the full Laplacian in front of F, w^T Lap^{-1} dw/dt = -w^T Lap^{-1} A w
  // - (w, F(U1) - F(U2))_grid <= 0, so |w|_{H^-1} never grows.
  const SpectralBasis& b = model.basis();
  if (b.min_eigenvalue() > 0.0 && problem.cutoff >= b.max_eigenvalue()) {
    r.contraction_envelope = r.initial_distance * std::sqrt(b.max_eigenvalue() / b.min_eigenvalue());
  }
  return r;
}

}  // namespace specgal
