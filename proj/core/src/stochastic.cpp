#include "specgal/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "specgal/errors.hpp"

namespace specgal {

namespace {

void check_basis(const KernelSpec& spec) {
  if (!spec.basis) throw KernelError("kernel without basis");
}

// Symmetrize and clip small negative eigenvalues.
Eigen::MatrixXd repair_psd(const Eigen::MatrixXd& k, const KernelOptions& opt) {
  const double scale = std::max(1e-300, k.cwiseAbs().maxCoeff());
  const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
  if (k.size() > 0 && asym > opt.symmetry_tol * scale) {
    std::ostringstream os;
    os << "kernel is not symmetric (max asymmetry " << asym << ")";
    throw KernelError(os.str());
  }
  Eigen::MatrixXd sym = 0.5 * (k + k.transpose());
  if (sym.size() == 0 || sym.cwiseAbs().maxCoeff() == 0.0) return sym;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw KernelError("kernel eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double tol = opt.psd_tol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (ev.minCoeff() >= 0.0) return sym;
  if (ev.minCoeff() < -tol) {
    std::ostringstream os;
    os << "kernel is not positive semidefinite (eigenvalue " << ev.minCoeff() << ")";
    throw KernelError(os.str());
  }
  ev = ev.cwiseMax(0.0);
  Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::VectorXd basis_values(const SpectralBasis& basis, std::span<const double> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t m = 0; m < basis.size(); ++m) v[static_cast<Eigen::Index>(m)] = basis.mode_value(m, x);
  return v;
}

}  // namespace

KernelSpec KernelSpec::from_diagonal(BasisPtr basis, Eigen::VectorXd mu) {
  KernelSpec s;
  s.basis = std::move(basis);
  s.representation = Representation::kDiagonal;
  if (static_cast<std::size_t>(mu.size()) != s.basis->size()) {
    throw ShapeError("diagonal kernel length does not match basis");
  }
  s.diagonal = std::move(mu);
  return s;
}

KernelSpec KernelSpec::from_matrix(BasisPtr basis, Eigen::MatrixXd k) {
  KernelSpec s;
  s.basis = std::move(basis);
  s.representation = Representation::kMatrix;
  const auto n = static_cast<Eigen::Index>(s.basis->size());
  if (k.rows() != n || k.cols() != n) throw ShapeError("kernel matrix does not match basis");
  s.matrix = std::move(k);
  return s;
}

KernelSpec KernelSpec::from_function(BasisPtr basis, KernelFunction k) {
  KernelSpec s;
  s.basis = std::move(basis);
  s.representation = Representation::kCallable;
  s.callable = std::move(k);
  return s;
}

Eigen::MatrixXd kernel_spectral_coeffs(const KernelSpec& spec, const KernelOptions& options) {
  check_basis(spec);
  switch (spec.representation) {
    case KernelSpec::Representation::kDiagonal: {
      if ((spec.diagonal.array() < 0.0).any()) throw KernelError("negative diagonal kernel entry");
      if (!spec.diagonal.allFinite()) throw KernelError("non-finite diagonal kernel entry");
      return spec.diagonal.asDiagonal();
    }
    case KernelSpec::Representation::kMatrix:
      if (!spec.matrix.allFinite()) throw KernelError("non-finite kernel matrix entry");
      return repair_psd(spec.matrix, options);
    case KernelSpec::Representation::kCallable:
      break;
  }
  if (!spec.callable) throw KernelError("callable kernel is empty");

  const GridSpec grid = options.grid ? *options.grid : spec.basis->default_grid();
  const GridTransform transform(spec.basis, grid);
  // Quadrature nodes with nonzero mode weight (Dirichlet boundary drops out).
  std::vector<std::size_t> nodes;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (!grid.is_boundary(p)) nodes.push_back(p);
  }
  const auto n = static_cast<Eigen::Index>(spec.basis->size());
  const auto g = static_cast<Eigen::Index>(nodes.size());
  // W(i, p) = w_p phi_i(x_p)
  Eigen::MatrixXd w(n, g);
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    unit.setZero();
    unit[i] = 1.0;
    const Eigen::VectorXd phi = transform.synthesize(unit);
    for (Eigen::Index q = 0; q < g; ++q) {
      const auto p = static_cast<Eigen::Index>(nodes[static_cast<std::size_t>(q)]);
      w(i, q) = transform.weights()[p] * phi[p];
    }
  }
  Eigen::MatrixXd kx(g, g);
  const auto dim = static_cast<std::size_t>(grid.dimension);
  for (Eigen::Index a = 0; a < g; ++a) {
    const auto xa = grid.point(nodes[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < g; ++b) {
      const auto xb = grid.point(nodes[static_cast<std::size_t>(b)]);
      const double v = spec.callable(std::span<const double>(xa.data(), dim),
                                     std::span<const double>(xb.data(), dim));
      if (!std::isfinite(v)) throw KernelError("kernel function returned a non-finite value");
      kx(a, b) = v;
    }
  }
  const Eigen::MatrixXd k = w * kx * w.transpose();
  return repair_psd(k, options);
}

double trace_of_kernel(const KernelSpec& spec, double ceiling) {
  check_basis(spec);
  double trace = 0.0;
  switch (spec.representation) {
    case KernelSpec::Representation::kDiagonal:
      trace = spec.diagonal.sum();
      break;
    case KernelSpec::Representation::kMatrix:
      trace = spec.matrix.trace();
      break;
    case KernelSpec::Representation::kCallable:
      trace = kernel_spectral_coeffs(spec).trace();
      break;
  }
  if (!std::isfinite(trace) || trace > ceiling) {
    std::ostringstream os;
    os << "kernel trace " << trace << " exceeds the trace-class ceiling " << ceiling;
    throw NotTraceClassError(os.str());
  }
  return trace;
}

double kernel_value(const Eigen::MatrixXd& k, const SpectralBasis& basis,
                    std::span<const double> x, std::span<const double> y) {
  const Eigen::VectorXd px = basis_values(basis, x);
  const Eigen::VectorXd py = basis_values(basis, y);
  return px.dot(k * py);
}

std::mt19937_64 make_member_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// GaussianSampler

GaussianSampler::GaussianSampler(BasisPtr basis, const Eigen::MatrixXd& k, double psd_tol)
    : basis_(std::move(basis)) {
  const auto n = static_cast<Eigen::Index>(basis_->size());
  if (k.rows() != n || k.cols() != n) throw ShapeError("covariance does not match basis");
  KernelOptions opt;
  opt.psd_tol = psd_tol;
  cov_ = repair_psd(k, opt);
  factor_ = Eigen::MatrixXd::Zero(n, n);
  if (n == 0 || cov_.cwiseAbs().maxCoeff() == 0.0) return;

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov_);
  // Eigen flags round-off sign flips on zero pivots as NumericalIssue; the
  // pivot check below applies the real tolerance.
  Eigen::VectorXd d = ldlt.vectorD();
  if (!d.allFinite()) throw KernelError("Cholesky factorization failed");
  const double tol = psd_tol * std::max(d.cwiseAbs().maxCoeff(), 1e-300);
  if (d.minCoeff() < -tol) throw KernelError("Cholesky factorization found a negative pivot");
  d = d.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd l = ldlt.matrixL();
  Eigen::MatrixXd ld = l * d.asDiagonal();
  factor_ = ldlt.transpositionsP().transpose() * ld;
}

Eigen::VectorXd GaussianSampler::sample_coeffs(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(factor_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return factor_ * z;
}

SpectralField GaussianSampler::sample(std::uint64_t seed) const {
  auto rng = make_member_rng(seed);
  return SpectralField(basis_, sample_coeffs(rng));
}

SpectralField sample_initial_condition(const GaussianSampler& sampler, std::uint64_t seed) {
  return sampler.sample(seed);
}

// ---------------------------------------------------------------------------
// Ensembles

std::size_t Ensemble::time_index(double t) const {
  const double scale = times.empty() ? 1.0 : std::max(1.0, std::abs(times.back()));
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 1e-12 * scale) return i;
  }
  std::ostringstream os;
  os << "t=" << t << " is not on the recording grid (no interpolation)";
  throw ShapeError(os.str());
}

Ensemble run_ensemble(const ParabolicProblem& problem, const GaussianSampler& sampler,
                      const EnsembleConfig& config) {
  if (config.members < 1) throw InvalidParameterError("ensemble needs at least one member");
  const ParabolicModel model(problem);
  const std::vector<double> times =
      config.times.empty() ? uniform_times(problem.horizon, 100) : config.times;

  const std::size_t n = config.members;
  std::vector<std::vector<Eigen::VectorXd>> results(n);
  std::vector<char> failed(n, 0);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  const auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        const SpectralField g = sampler.sample(config.base_seed + i);
        results[i] = integrate_parabolic(model, g, config.control, times).states;
      } catch (const IntegrationFailure&) {
        failed[i] = 1;
      } catch (const NumericError&) {
        failed[i] = 1;
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        failed[i] = 1;
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(n)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  Ensemble ens;
  ens.basis = problem.basis;
  ens.times = times;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = config.base_seed + i;
    if (failed[i]) {
      ens.failed_seeds.push_back(seed);
    } else {
      ens.seeds.push_back(seed);
      ens.trajectories.push_back(std::move(results[i]));
    }
  }
  if (ens.failed_seeds.size() * 10 > n) {
    std::ostringstream os;
    os << ens.failed_seeds.size() << " of " << n << " ensemble members failed";
    throw EnsembleError(os.str());
  }
  return ens;
}

CharacteristicProbe CharacteristicProbe::zero(std::size_t intervals, std::size_t modes) {
  CharacteristicProbe p;
  p.j.assign(intervals, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(modes)));
  return p;
}

double probe_pairing(const std::vector<double>& times, const std::vector<Eigen::VectorXd>& states,
                     const CharacteristicProbe& probe) {
  if (times.size() < 2 || probe.j.size() != times.size() - 1 || states.size() != times.size()) {
    throw ShapeError("probe time grid does not match the recording grid");
  }
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const auto& jk = probe.j[k];
    if (jk.size() != states[k].size()) throw ShapeError("probe does not match basis size");
    if (!jk.allFinite()) throw NumericError("probe has non-finite entries");
    s += (times[k + 1] - times[k]) * 0.5 * jk.dot(states[k] + states[k + 1]);
  }
  return s;
}

ComplexEstimate estimate_characteristic_functional(const Ensemble& ens,
                                                   const CharacteristicProbe& probe) {
  const std::size_t n = ens.size();
  if (n == 0) throw EnsembleError("empty ensemble");
  double sum_c = 0.0, sum_s = 0.0, sum_cc = 0.0, sum_ss = 0.0;
  for (const auto& traj : ens.trajectories) {
    const double phase = probe_pairing(ens.times, traj, probe);
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    sum_c += c;
    sum_s += s;
    sum_cc += c * c;
    sum_ss += s * s;
  }
  const double nd = static_cast<double>(n);
  ComplexEstimate est;
  est.value = {sum_c / nd, sum_s / nd};
  if (n > 1) {
    const double var_c = std::max(0.0, (sum_cc - sum_c * sum_c / nd) / (nd - 1.0));
    const double var_s = std::max(0.0, (sum_ss - sum_s * sum_s / nd) / (nd - 1.0));
    est.stderr_real = std::sqrt(var_c / nd);
    est.stderr_imag = std::sqrt(var_s / nd);
  }
  return est;
}

MomentEstimate estimate_two_point(const Ensemble& ens, std::span<const double> x,
                                  std::span<const double> y, double t) {
  const std::size_t n = ens.size();
  if (n < 2) throw EnsembleError("two-point estimate needs at least two members");
  const std::size_t k = ens.time_index(t);
  const Eigen::VectorXd px = basis_values(*ens.basis, x);
  const Eigen::VectorXd py = basis_values(*ens.basis, y);
  std::vector<double> a(n), b(n);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = px.dot(ens.trajectories[i][k]);
    b[i] = py.dot(ens.trajectories[i][k]);
    ma += a[i];
    mb += b[i];
  }
  const double nd = static_cast<double>(n);
  ma /= nd;
  mb /= nd;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Symmetric in (a, b) so that swapping x and y is bit-exact.
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    const double prod = da * db;
    sum += prod;
    sum_sq += prod * prod;
  }
  MomentEstimate est;
  est.value = sum / (nd - 1.0);
  const double mean_prod = sum / nd;
  const double var_prod = std::max(0.0, (sum_sq - nd * mean_prod * mean_prod) / (nd - 1.0));
  est.stderr = std::sqrt(var_prod / nd);
  return est;
}

MomentReport moment_report(const Ensemble& ens, const std::vector<TwoPointQuery>& queries,
                           const std::vector<CharacteristicProbe>& probes) {
  MomentReport rep;
  const std::size_t n = ens.size();
  if (n == 0) throw EnsembleError("empty ensemble");
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < ens.times.size(); ++k) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(ens.trajectories.front()[k].size());
    Eigen::VectorXd sum_sq = sum;
    for (const auto& traj : ens.trajectories) {
      sum += traj[k];
      sum_sq += traj[k].cwiseAbs2();
    }
    Eigen::VectorXd mean = sum / nd;
    Eigen::VectorXd se = Eigen::VectorXd::Zero(mean.size());
    if (n > 1) {
      se = ((sum_sq - nd * mean.cwiseAbs2()) / (nd - 1.0)).cwiseMax(0.0).cwiseSqrt() /
           std::sqrt(nd);
    }
    rep.mean.push_back(std::move(mean));
    rep.mean_stderr.push_back(std::move(se));
  }
  const auto dim = static_cast<std::size_t>(ens.basis->dimension());
  for (const auto& q : queries) {
    rep.covariances.push_back(estimate_two_point(ens, std::span<const double>(q.x.data(), dim),
                                                 std::span<const double>(q.y.data(), dim), q.t));
  }
  for (const auto& p : probes) rep.characteristic.push_back(estimate_characteristic_functional(ens, p));
  return rep;
}

PhysicalField sample_lognormal_potential(double v0, double coupling, const GaussianSampler& sampler,
                                         const GridSpec& grid, std::uint64_t seed) {
  if (!(v0 > 0.0)) throw InvalidParameterError("background potential V0 must be > 0");
  if (!(coupling >= 0.0)) throw InvalidParameterError("coupling must be >= 0");
  const SpectralField a = sampler.sample(seed);
  PhysicalField field = synthesize(a, grid);
  for (Eigen::Index i = 0; i < field.values.size(); ++i) {
    field.values[i] = v0 * std::exp(coupling * field.values[i]);
  }
  return field;
}

PhysicalField sample_stochastic_damping(double nu0, double coupling, const GaussianSampler& sampler,
                                        const GridSpec& grid, std::uint64_t seed) {
  if (!(nu0 > 0.0)) throw InvalidParameterError("background damping must be > 0");
  PhysicalField nu_sq = sample_lognormal_potential(nu0 * nu0, coupling, sampler, grid, seed);
  nu_sq.values = nu_sq.values.cwiseSqrt();
  return nu_sq;
}

}  // namespace specgal
