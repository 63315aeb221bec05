#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specgal/parabolic.hpp"
#include "specgal/spectral_basis.hpp"

namespace specgal {

using KernelFunction = std::function<double(std::span<const double> x, std::span<const double> y)>;

// Correlation kernel of a zero-mean Gaussian field, E{g(x) g(y)} = K(x, y),
// in one of three representations.
struct KernelSpec {
  enum class Representation { kDiagonal, kMatrix, kCallable };

  BasisPtr basis;
  Representation representation = Representation::kDiagonal;
  Eigen::VectorXd diagonal;  // mu_i >= 0
  Eigen::MatrixXd matrix;    // K_ik
  KernelFunction callable;   // K(x, y)

  static KernelSpec from_diagonal(BasisPtr basis, Eigen::VectorXd mu);
  static KernelSpec from_matrix(BasisPtr basis, Eigen::MatrixXd k);
  static KernelSpec from_function(BasisPtr basis, KernelFunction k);
};

struct KernelOptions {
  double symmetry_tol = 1e-8;  // relative to max |K_ik|
  double psd_tol = 1e-8;       // relative to the largest eigenvalue
  std::optional<GridSpec> grid;
};

// K_ik = int int K(x, y) phi_i(x) phi_k(y) dx dy by tensor quadrature,
// symmetrized, with eigenvalues in [-tol, 0) clipped to zero. Eigenvalues
// below -tol raise KernelError.
Eigen::MatrixXd kernel_spectral_coeffs(const KernelSpec& spec, const KernelOptions& options = {});

// Sum of K_ii. Throws NotTraceClassError when it exceeds `ceiling`.
double trace_of_kernel(const KernelSpec& spec, double ceiling = 1e6);

// K(x, y) reconstructed from spectral coefficients.
double kernel_value(const Eigen::MatrixXd& k, const SpectralBasis& basis,
                    std::span<const double> x, std::span<const double> y);

// Per-member generator; the stream is a pure function of the seed.
std::mt19937_64 make_member_rng(std::uint64_t seed);

// Cached pivoted Cholesky (LDL^T) factor B with B B^T = K.
class GaussianSampler {
 public:
  GaussianSampler(BasisPtr basis, const Eigen::MatrixXd& k, double psd_tol = 1e-8);

  const BasisPtr& basis() const { return basis_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& factor() const { return factor_; }

  SpectralField sample(std::uint64_t seed) const;
  Eigen::VectorXd sample_coeffs(std::mt19937_64& rng) const;

 private:
  BasisPtr basis_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
};

SpectralField sample_initial_condition(const GaussianSampler& sampler, std::uint64_t seed);

struct EnsembleConfig {
  std::size_t members = 1;
  std::uint64_t base_seed = 0;
  std::vector<double> times;  // shared recording grid; defaults to 100 intervals
  StepControl control{};
  unsigned workers = 1;
};

struct Ensemble {
  BasisPtr basis;
  std::vector<double> times;
  std::vector<std::uint64_t> seeds;                          // successful members
  std::vector<std::vector<Eigen::VectorXd>> trajectories;    // [member][time]
  std::vector<std::uint64_t> failed_seeds;

  std::size_t size() const { return trajectories.size(); }
  std::size_t time_index(double t) const;  // exact grid match or ShapeError
};

// Members use seeds base_seed, base_seed + 1, ...; results are independent of
// the worker count. Fails when more than 10% of members fail to integrate.
Ensemble run_ensemble(const ParabolicProblem& problem, const GaussianSampler& sampler,
                      const EnsembleConfig& config);

// Piecewise-constant-in-time spectral probe: one coefficient vector per
// recording interval [t_k, t_{k+1}).
struct CharacteristicProbe {
  std::vector<Eigen::VectorXd> j;

  static CharacteristicProbe zero(std::size_t intervals, std::size_t modes);
};

// sum_k (t_{k+1} - t_k) <j_k, (U_k + U_{k+1}) / 2>
double probe_pairing(const std::vector<double>& times, const std::vector<Eigen::VectorXd>& states,
                     const CharacteristicProbe& probe);

struct ComplexEstimate {
  std::complex<double> value;
  double stderr_real = 0.0;
  double stderr_imag = 0.0;
};

ComplexEstimate estimate_characteristic_functional(const Ensemble& ens,
                                                   const CharacteristicProbe& probe);

struct MomentEstimate {
  double value = 0.0;
  double stderr = 0.0;
};

// Sample covariance of U(x, t) and U(y, t); t must lie on the recording grid.
MomentEstimate estimate_two_point(const Ensemble& ens, std::span<const double> x,
                                  std::span<const double> y, double t);

struct TwoPointQuery {
  std::array<double, 3> x{};
  std::array<double, 3> y{};
  double t = 0.0;
};

struct MomentReport {
  std::vector<Eigen::VectorXd> mean;  // mean coefficients per recorded time
  std::vector<Eigen::VectorXd> mean_stderr;
  std::vector<MomentEstimate> covariances;
  std::vector<ComplexEstimate> characteristic;
};

MomentReport moment_report(const Ensemble& ens, const std::vector<TwoPointQuery>& queries,
                           const std::vector<CharacteristicProbe>& probes);

// V(x) = V0 exp(g_c a(x)) with a a Gaussian field drawn from `sampler` and
// synthesized on `grid`.
PhysicalField sample_lognormal_potential(double v0, double coupling, const GaussianSampler& sampler,
                                         const GridSpec& grid, std::uint64_t seed);

// Positive damping field with nu^2 lognormal: nu = sqrt(nu0^2 exp(g_c a(x))).
PhysicalField sample_stochastic_damping(double nu0, double coupling, const GaussianSampler& sampler,
                                        const GridSpec& grid, std::uint64_t seed);

}  // namespace specgal
