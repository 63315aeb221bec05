#include "specgal/anomalous.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "specgal/errors.hpp"

namespace specgal {

namespace {

double sphere_surface(int dimension) {
  switch (dimension) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw InvalidParameterError("dimension must be 1, 2 or 3");
  }
}

void check_admissible(double alpha, int dimension) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameterError("alpha must be > 0");
  sphere_surface(dimension);
  if (!(4.0 * alpha > dimension)) {
    std::ostringstream os;
    os << "alpha=" << alpha << " <= D/4=" << dimension / 4.0
       << ": the resolvent-square integral diverges";
    throw DivergentIntegralError(os.str());
  }
}

}  // namespace

double kato_rellich_constant(double alpha, int dimension, const QuadratureConfig& config) {
  check_admissible(alpha, dimension);
  const double d = dimension;
  boost::math::quadrature::tanh_sinh<double> integrator(config.max_refinements);
  const auto head = [&](double r) {
    const double q = 1.0 + std::pow(r, 2.0 * alpha);
    return std::pow(r, d - 1.0) / (q * q);
  };
  // r = 1/s on [1, inf) and then w = s^beta, beta = 4 alpha - D, which removes
  // the endpoint singularity s^{beta - 1}: the tail is (1/beta) int_0^1 dw / (1 + s^{2 alpha})^2.
  const double beta = 4.0 * alpha - d;
  const auto tail = [&](double w) {
    const double q = 1.0 + std::pow(w, 2.0 * alpha / beta);
    return 1.0 / (beta * q * q);
  };
  const double inner = integrator.integrate(head, 0.0, 1.0, config.tolerance);
  const double outer = integrator.integrate(tail, 0.0, 1.0, config.tolerance);
  return sphere_surface(dimension) * (inner + outer);
}

RelativeBound relative_bound_with_constant(double v_norm, double constant, double alpha,
                                           int dimension, double r) {
  check_admissible(alpha, dimension);
  if (!(r > 0.0)) throw InvalidParameterError("scale r must be > 0");
  if (!(v_norm >= 0.0)) throw InvalidParameterError("potential norm must be >= 0");
  const double d = dimension;
  const double vc = v_norm * constant;
  RelativeBound out;
  out.a = vc * std::pow(r, d / 2.0 - 2.0 * alpha);
  out.b = vc * std::pow(r, d / 2.0);
  out.r_min = std::pow(vc, 2.0 / (4.0 * alpha - d));
  return out;
}

RelativeBound relative_bound(double v_norm, double alpha, int dimension, double r) {
  return relative_bound_with_constant(v_norm, kato_rellich_constant(alpha, dimension), alpha,
                                      dimension, r);
}

KatoRellichReport kato_rellich_report(double v_norm, double alpha, int dimension, double r) {
  KatoRellichReport rep;
  rep.alpha = alpha;
  rep.dimension = dimension;
  rep.v_norm = v_norm;
  rep.r = r;
  try {
    rep.constant = kato_rellich_constant(alpha, dimension);
  } catch (const DivergentIntegralError&) {
    rep.divergent = true;
    return rep;
  }
  const RelativeBound rb = relative_bound_with_constant(v_norm, rep.constant, alpha, dimension, r);
  rep.a = rb.a;
  rep.b = rb.b;
  rep.r_min = rb.r_min;
  rep.admissible = rb.a < 1.0;
  return rep;
}

// ---------------------------------------------------------------------------

SpectralField evolve_fractional(const SpectralField& initial, const FractionalOperatorSpec& spec,
                                const NonlinearityProfile* profile, double t, int steps,
                                const FractionalOptions& options) {
  if (!initial.basis) throw ShapeError("initial field without basis");
  const SpectralBasis& basis = *initial.basis;
  if (basis.kind() != DomainKind::kPeriodicTorus) {
    throw NotApplicableError("fractional evolution needs a periodic basis");
  }
  if (steps < 1) throw InvalidParameterError("steps must be >= 1");
  if (!(spec.alpha > 0.0)) throw InvalidParameterError("alpha must be > 0");
  if (!(spec.d0 > 0.0)) throw InvalidParameterError("D0 must be > 0");
  if (!(t >= 0.0)) throw InvalidParameterError("t must be >= 0");
  const bool nonlinear = spec.coupling != 0.0;
  if (nonlinear && profile == nullptr) throw InvalidParameterError("coupling without a profile");

  const double dt = t / steps;
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXd half(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    half[m] = std::exp(-0.5 * dt * spec.d0 * std::pow(basis.eigenvalue(static_cast<std::size_t>(m)), spec.alpha));
  }

  const GridSpec grid = spec.potential ? spec.potential->grid : basis.default_grid();
  const GridTransform transform(initial.basis, grid);
  Eigen::MatrixXd mult = Eigen::MatrixXd::Zero(n, n);
  const bool has_potential = spec.potential.has_value();
  if (has_potential) {
    if (!spec.potential->values.allFinite()) throw NumericError("potential is not finite");
    mult = transform.multiplication_matrix(spec.potential->values);
  }

  // Linear local flow: exp(dt M) once.
  Eigen::MatrixXd local_exp = Eigen::MatrixXd::Identity(n, n);
  if (has_potential && !nonlinear) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mult);
    if (es.info() != Eigen::Success) throw LinearAlgebraError("potential eigendecomposition failed");
    local_exp = es.eigenvectors() * (dt * es.eigenvalues()).array().exp().matrix().asDiagonal() *
                es.eigenvectors().transpose();
  }

  const auto local_rhs = [&](const Eigen::VectorXd& c) {
    Eigen::VectorXd out = has_potential ? Eigen::VectorXd(mult * c) : Eigen::VectorXd::Zero(n);
    Eigen::VectorXd vals = transform.synthesize(c);
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = profile->F(vals[i]);
    out += spec.coupling * transform.project(vals);
    return out;
  };

  Eigen::VectorXd u = initial.coeffs;
  if (u.size() != n) throw ShapeError("initial coefficients do not match basis");
  for (int s = 0; s < steps; ++s) {
    u = half.cwiseProduct(u);
    if (nonlinear) {
      const double h = dt / options.local_substeps;
      for (int k = 0; k < options.local_substeps; ++k) {
        const Eigen::VectorXd k1 = local_rhs(u);
        const Eigen::VectorXd k2 = local_rhs(u + 0.5 * h * k1);
        const Eigen::VectorXd k3 = local_rhs(u + 0.5 * h * k2);
        const Eigen::VectorXd k4 = local_rhs(u + h * k3);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    } else if (has_potential) {
      u = local_exp * u;
    }
    u = half.cwiseProduct(u);
    const double norm = u.norm();
    if (!std::isfinite(norm) || norm > options.blowup_threshold) {
      std::ostringstream os;
      os << "fractional evolution blew up at step " << s + 1 << " (norm " << norm << ")";
      throw InstabilityError(os.str());
    }
  }
  return SpectralField(initial.basis, u);
}

std::complex<double> free_propagator(double omega, double k_mag, double d0, double alpha) {
  if (!(d0 > 0.0)) throw InvalidParameterError("D0 must be > 0");
  if (!(alpha > 0.0)) throw InvalidParameterError("alpha must be > 0");
  if (!(k_mag >= 0.0)) throw InvalidParameterError("wavenumber must be >= 0");
  if (omega == 0.0 && k_mag == 0.0) throw PoleError("free propagator pole at omega = k = 0");
  return 1.0 / std::complex<double>(-d0 * std::pow(k_mag, 2.0 * alpha), omega);
}

// ---------------------------------------------------------------------------

DampedWaveResult damped_wave_propagate(const DampedWaveProblem& problem, double t) {
  if (!problem.basis) throw ShapeError("damped wave problem without basis");
  const SpectralBasis& basis = *problem.basis;
  const auto n = static_cast<Eigen::Index>(basis.size());
  if (problem.f.size() != n || problem.g.size() != n) {
    throw ShapeError("initial data do not match basis");
  }
  if (problem.truncation < 1 || problem.truncation > basis.size()) {
    if (problem.truncation < 1) throw InvalidParameterError("truncation must be >= 1");
  }
  const auto nt = static_cast<Eigen::Index>(std::min<std::size_t>(problem.truncation, basis.size()));
  if (!(problem.alpha > 0.0)) throw InvalidParameterError("alpha must be > 0");

  const bool varying = problem.damping_field.has_value();
  GridSpec grid = basis.default_grid();
  if (varying) grid = problem.damping_field->grid;
  if (problem.output_grid) {
    if (varying && !(*problem.output_grid == grid)) {
      throw ShapeError("output grid must match the damping field grid");
    }
    grid = *problem.output_grid;
  }
  const GridTransform transform(problem.basis, grid);

  Eigen::VectorXd nu_x;
  if (varying) {
    nu_x = problem.damping_field->values;
    if (!nu_x.allFinite() || (nu_x.array() < 0.0).any()) {
      throw InvalidParameterError("damping field must be finite and >= 0");
    }
  } else {
    if (!(problem.damping >= 0.0) || !std::isfinite(problem.damping)) {
      throw InvalidParameterError("damping must be finite and >= 0");
    }
    nu_x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), problem.damping);
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nt, nt);
  Eigen::VectorXd gbar(nt);
  const Eigen::VectorXd f = problem.f.head(nt);
  if (varying) {
    const Eigen::MatrixXd quarter_sq =
        transform.multiplication_matrix(0.25 * nu_x.cwiseAbs2()).topLeftCorner(nt, nt);
    const Eigen::MatrixXd half_nu = transform.multiplication_matrix(0.5 * nu_x).topLeftCorner(nt, nt);
    a = -quarter_sq;
    gbar = half_nu * f + problem.g.head(nt);
  } else {
    const double nu = problem.damping;
    a.diagonal().setConstant(-0.25 * nu * nu);
    gbar = 0.5 * nu * f + problem.g.head(nt);
  }
  for (Eigen::Index m = 0; m < nt; ++m) {
    a(m, m) += std::pow(basis.eigenvalue(static_cast<std::size_t>(m)), problem.alpha);
  }
  a = 0.5 * (a + a.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw LinearAlgebraError("A eigendecomposition failed");
  const Eigen::VectorXd mu = es.eigenvalues();
  Eigen::VectorXd c(nt), s(nt);
  for (Eigen::Index i = 0; i < nt; ++i) {
    const double w = std::sqrt(std::abs(mu[i]));
    if (mu[i] > 0.0) {
      c[i] = std::cos(t * w);
      s[i] = std::sin(t * w) / w;
    } else if (mu[i] < 0.0) {
      c[i] = std::cosh(t * w);
      s[i] = std::sinh(t * w) / w;
    } else {
      c[i] = 1.0;
      s[i] = t;
    }
  }
  const Eigen::MatrixXd& q = es.eigenvectors();
  const Eigen::VectorXd phi =
      q * (c.cwiseProduct(q.transpose() * f) + s.cwiseProduct(q.transpose() * gbar));

  DampedWaveResult out;
  out.phi_coeffs = phi;
  out.a_eigenvalues = mu;
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  full.head(nt) = phi;
  out.phi = PhysicalField{grid, transform.synthesize(full)};
  out.u = out.phi;
  for (Eigen::Index i = 0; i < out.u.values.size(); ++i) {
    out.u.values[i] *= std::exp(-0.5 * nu_x[i] * t);
  }
  if (!varying) out.u_coeffs = std::exp(-0.5 * problem.damping * t) * phi;
  return out;
}

}  // namespace specgal
