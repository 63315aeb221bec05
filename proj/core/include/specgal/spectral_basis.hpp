#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace specgal {

enum class DomainKind { kDirichletCube, kPeriodicTorus };

const char* to_string(DomainKind kind);

struct BasisSpec {
  DomainKind kind = DomainKind::kDirichletCube;
  double side_length = 1.0;
  int dimension = 1;
  int modes_per_axis = 1;
};

using MultiIndex = std::array<int, 3>;

// Tensor-product sample grid on [0, L]^d.
//
// Dirichlet grids include both boundary samples: x_k = k L / (N - 1) for
// k = 0..N-1, with trapezoid weights. Periodic grids are uniform without the
// duplicated endpoint: x_k = k L / N, weights L / N.
struct GridSpec {
  DomainKind kind = DomainKind::kDirichletCube;
  double side_length = 1.0;
  int dimension = 1;
  int points_per_axis = 3;

  std::size_t size() const;
  double coordinate(int k) const;
  double weight(int k) const;
  // Flattened row-major index -> per-axis sample indices.
  MultiIndex unflatten(std::size_t flat) const;
  std::array<double, 3> point(std::size_t flat) const;
  bool is_boundary(std::size_t flat) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Orthonormal eigenbasis of -Laplacian on a box.
//
// Dirichlet axis mode i (0-based) is sqrt(2/L) sin((i+1) pi x / L) with
// eigenvalue ((i+1) pi / L)^2. Periodic axis modes are the real Fourier
// family 1/sqrt(L), sqrt(2/L) cos(2 pi k x / L), sqrt(2/L) sin(2 pi k x / L),
// ordered by frequency. A d-dimensional mode is the product of axis modes;
// modes are stored row-major in their axis indices.
class SpectralBasis {
 public:
  explicit SpectralBasis(const BasisSpec& spec);

  const BasisSpec& spec() const { return spec_; }
  DomainKind kind() const { return spec_.kind; }
  int dimension() const { return spec_.dimension; }
  int modes_per_axis() const { return spec_.modes_per_axis; }
  double side_length() const { return spec_.side_length; }
  std::size_t size() const { return eigenvalues_.size(); }

  double eigenvalue(std::size_t mode) const { return eigenvalues_[mode]; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double min_eigenvalue() const;
  double max_eigenvalue() const;

  // 0-based per-axis mode indices of a flattened mode (unused axes are 0).
  const MultiIndex& axis_modes(std::size_t mode) const { return axis_modes_[mode]; }
  // Physical wave numbers: (i, j, k) of sin(i pi x / L)... for Dirichlet,
  // the Fourier frequency per axis for periodic bases.
  MultiIndex wave_numbers(std::size_t mode) const;
  // Inverse of wave_numbers for Dirichlet bases; for periodic bases the
  // argument is interpreted as axis mode indices.
  std::size_t mode_index(const MultiIndex& wave_numbers) const;
  // Returns the mode with the given wave numbers, or npos.
  std::size_t find_mode(const MultiIndex& wave_numbers) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  double axis_eigenvalue(int axis_mode) const;
  double axis_function(int axis_mode, double x) const;
  double axis_derivative(int axis_mode, double x) const;

  double mode_value(std::size_t mode, std::span<const double> point) const;
  double evaluate(const Eigen::VectorXd& coeffs, std::span<const double> point) const;

  // 2n+1 interior samples per axis (Dirichlet adds the two boundary samples).
  GridSpec default_grid() const;
  // Smallest grid on which products of two basis modes integrate exactly.
  int min_points_per_axis() const;

 private:
  BasisSpec spec_;
  Eigen::VectorXd eigenvalues_;
  std::vector<MultiIndex> axis_modes_;
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

BasisPtr build_basis(const BasisSpec& spec);

struct SpectralField {
  BasisPtr basis;
  Eigen::VectorXd coeffs;

  SpectralField() = default;
  SpectralField(BasisPtr b, Eigen::VectorXd c);
  static SpectralField zero(BasisPtr b);
  static SpectralField unit(BasisPtr b, std::size_t mode, double value = 1.0);

  double norm_squared() const { return coeffs.squaredNorm(); }
};

struct PhysicalField {
  GridSpec grid;
  Eigen::VectorXd values;
};

// Cached per-axis sample/projection matrices for one (basis, grid) pair.
// Transforms are separable tensor contractions, O(N n^d + N^d n) per call.
class GridTransform {
 public:
  GridTransform(BasisPtr basis, const GridSpec& grid);

  const SpectralBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  const GridSpec& grid() const { return grid_; }

  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const;
  // Sampled partial derivative along `axis` of the synthesized field.
  Eigen::VectorXd synthesize_derivative(const Eigen::VectorXd& coeffs, int axis) const;
  // Quadrature inner products against each mode.
  Eigen::VectorXd project(const Eigen::VectorXd& values) const;
  double integrate(const Eigen::VectorXd& values) const;
  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  const Eigen::VectorXd& weights() const { return weights_; }

  // Dense matrix of the projected multiplication operator P(m .) in the
  // basis: M_ij = sum_x w(x) m(x) phi_i(x) phi_j(x). Symmetric.
  Eigen::MatrixXd multiplication_matrix(const Eigen::VectorXd& multiplier) const;

 private:
  Eigen::VectorXd apply(const Eigen::VectorXd& in, bool to_grid,
                        int derivative_axis) const;

  BasisPtr basis_;
  GridSpec grid_;
  Eigen::MatrixXd samples_;      // N x n
  Eigen::MatrixXd derivatives_;  // N x n
  Eigen::MatrixXd projector_;    // n x N, samples^T diag(w)
  Eigen::VectorXd weights_;      // flattened tensor weights
};

PhysicalField synthesize(const SpectralField& field, const GridSpec& grid);
SpectralField project(const PhysicalField& field, const BasisPtr& basis);
double inner_product(const PhysicalField& a, const PhysicalField& b);

// Sharp Garding-Poincare constant of -Laplacian with Dirichlet conditions:
// the smallest eigenvalue.
double poincare_constant(const SpectralBasis& basis);

using SpectralMultiplier = std::function<double(double)>;

SpectralField apply_spectral_multiplier(const SpectralField& field,
                                        const SpectralMultiplier& m);

// Samples an arbitrary function on a grid.
PhysicalField sample_function(const GridSpec& grid,
                              const std::function<double(std::span<const double>)>& f);

// Coefficients of `field` on the modes of `target` that share wave numbers;
// modes absent from `field` are zero.
SpectralField transfer(const SpectralField& field, const BasisPtr& target);

}  // namespace specgal
