#include "specgal/spectral_basis.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "specgal/errors.hpp"

namespace specgal {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Applies `m` (rows x len) along `axis` of a row-major tensor with extents
// `dims` (only the first `rank` entries used). Updates dims[axis].
Eigen::VectorXd apply_along_axis(const Eigen::VectorXd& in, std::array<int, 3>& dims,
                                 int rank, int axis, const Eigen::MatrixXd& m) {
  std::size_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(dims[a]);
  std::size_t inner = 1;
  for (int a = axis + 1; a < rank; ++a) inner *= static_cast<std::size_t>(dims[a]);
  const auto len = static_cast<std::size_t>(dims[axis]);
  const auto rows = static_cast<std::size_t>(m.rows());

  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(outer * rows * inner));
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = in.data() + o * len * inner;
    double* dst = out.data() + o * rows * inner;
    for (std::size_t r = 0; r < rows; ++r) {
      double* drow = dst + r * inner;
      for (std::size_t c = 0; c < len; ++c) {
        const double coef = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (coef == 0.0) continue;
        const double* srow = src + c * inner;
        for (std::size_t k = 0; k < inner; ++k) drow[k] += coef * srow[k];
      }
    }
  }
  dims[axis] = static_cast<int>(rows);
  return out;
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

}  // namespace

const char* to_string(DomainKind kind) {
  return kind == DomainKind::kDirichletCube ? "dirichlet-cube" : "periodic-torus";
}

// ---------------------------------------------------------------------------
// GridSpec

std::size_t GridSpec::size() const {
  return ipow(static_cast<std::size_t>(points_per_axis), dimension);
}

double GridSpec::coordinate(int k) const {
  if (kind == DomainKind::kDirichletCube) {
    return side_length * static_cast<double>(k) / static_cast<double>(points_per_axis - 1);
  }
  return side_length * static_cast<double>(k) / static_cast<double>(points_per_axis);
}

double GridSpec::weight(int k) const {
  if (kind == DomainKind::kDirichletCube) {
    const double h = side_length / static_cast<double>(points_per_axis - 1);
    return (k == 0 || k == points_per_axis - 1) ? 0.5 * h : h;
  }
  return side_length / static_cast<double>(points_per_axis);
}

MultiIndex GridSpec::unflatten(std::size_t flat) const {
  MultiIndex idx{0, 0, 0};
  const auto n = static_cast<std::size_t>(points_per_axis);
  for (int a = dimension - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

std::array<double, 3> GridSpec::point(std::size_t flat) const {
  const MultiIndex idx = unflatten(flat);
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int a = 0; a < dimension; ++a) p[a] = coordinate(idx[a]);
  return p;
}

bool GridSpec::is_boundary(std::size_t flat) const {
  if (kind != DomainKind::kDirichletCube) return false;
  const MultiIndex idx = unflatten(flat);
  for (int a = 0; a < dimension; ++a) {
    if (idx[a] == 0 || idx[a] == points_per_axis - 1) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// SpectralBasis

SpectralBasis::SpectralBasis(const BasisSpec& spec) : spec_(spec) {
  if (!(spec.side_length > 0.0) || !std::isfinite(spec.side_length)) {
    throw ConfigurationError("basis side length must be positive and finite");
  }
  if (spec.dimension < 1 || spec.dimension > 3) {
    throw ConfigurationError("basis dimension must be 1, 2 or 3");
  }
  if (spec.modes_per_axis < 1) {
    throw ConfigurationError("modes_per_axis must be >= 1");
  }
  if (spec.modes_per_axis > 4096) {
    throw ConfigurationError("modes_per_axis too large");
  }
  const std::size_t total = ipow(static_cast<std::size_t>(spec.modes_per_axis), spec.dimension);
  if (total > (std::size_t{1} << 24)) {
    throw ConfigurationError("total mode count exceeds supported size");
  }

  eigenvalues_.resize(static_cast<Eigen::Index>(total));
  axis_modes_.resize(total);
  const auto n = static_cast<std::size_t>(spec.modes_per_axis);
  for (std::size_t m = 0; m < total; ++m) {
    MultiIndex idx{0, 0, 0};
    std::size_t rest = m;
    for (int a = spec.dimension - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rest % n);
      rest /= n;
    }
    double lambda = 0.0;
    for (int a = 0; a < spec.dimension; ++a) lambda += axis_eigenvalue(idx[a]);
    axis_modes_[m] = idx;
    eigenvalues_[static_cast<Eigen::Index>(m)] = lambda;
  }
}

double SpectralBasis::min_eigenvalue() const { return eigenvalues_.minCoeff(); }
double SpectralBasis::max_eigenvalue() const { return eigenvalues_.maxCoeff(); }

MultiIndex SpectralBasis::wave_numbers(std::size_t mode) const {
  MultiIndex w = axis_modes_.at(mode);
  for (int a = 0; a < spec_.dimension; ++a) {
    w[a] = spec_.kind == DomainKind::kDirichletCube ? w[a] + 1 : (w[a] + 1) / 2;
  }
  return w;
}

std::size_t SpectralBasis::find_mode(const MultiIndex& wave_numbers) const {
  const int n = spec_.modes_per_axis;
  std::size_t flat = 0;
  for (int a = 0; a < spec_.dimension; ++a) {
    const int axis_mode =
        spec_.kind == DomainKind::kDirichletCube ? wave_numbers[a] - 1 : wave_numbers[a];
    if (axis_mode < 0 || axis_mode >= n) return npos;
    flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(axis_mode);
  }
  return flat;
}

std::size_t SpectralBasis::mode_index(const MultiIndex& wave_numbers) const {
  const std::size_t m = find_mode(wave_numbers);
  if (m == npos) {
    std::ostringstream os;
    os << "multi-index (" << wave_numbers[0] << "," << wave_numbers[1] << ","
       << wave_numbers[2] << ") outside basis";
    throw ShapeError(os.str());
  }
  return m;
}

double SpectralBasis::axis_eigenvalue(int axis_mode) const {
  const double L = spec_.side_length;
  if (spec_.kind == DomainKind::kDirichletCube) {
    const double k = (axis_mode + 1) * kPi / L;
    return k * k;
  }
  const double k = 2.0 * kPi * ((axis_mode + 1) / 2) / L;
  return k * k;
}

double SpectralBasis::axis_function(int axis_mode, double x) const {
  const double L = spec_.side_length;
  const double amp = std::sqrt(2.0 / L);
  if (spec_.kind == DomainKind::kDirichletCube) {
    return amp * std::sin((axis_mode + 1) * kPi * x / L);
  }
  if (axis_mode == 0) return 1.0 / std::sqrt(L);
  const int k = (axis_mode + 1) / 2;
  const double arg = 2.0 * kPi * k * x / L;
  return (axis_mode % 2 == 1) ? amp * std::cos(arg) : amp * std::sin(arg);
}

double SpectralBasis::axis_derivative(int axis_mode, double x) const {
  const double L = spec_.side_length;
  const double amp = std::sqrt(2.0 / L);
  if (spec_.kind == DomainKind::kDirichletCube) {
    const double k = (axis_mode + 1) * kPi / L;
    return amp * k * std::cos(k * x);
  }
  if (axis_mode == 0) return 0.0;
  const double k = 2.0 * kPi * ((axis_mode + 1) / 2) / L;
  return (axis_mode % 2 == 1) ? -amp * k * std::sin(k * x) : amp * k * std::cos(k * x);
}

double SpectralBasis::mode_value(std::size_t mode, std::span<const double> point) const {
  if (point.size() < static_cast<std::size_t>(spec_.dimension)) {
    throw ShapeError("point has fewer coordinates than the basis dimension");
  }
  const MultiIndex& idx = axis_modes_.at(mode);
  double v = 1.0;
  for (int a = 0; a < spec_.dimension; ++a) v *= axis_function(idx[a], point[a]);
  return v;
}

double SpectralBasis::evaluate(const Eigen::VectorXd& coeffs,
                               std::span<const double> point) const {
  if (static_cast<std::size_t>(coeffs.size()) != size()) {
    throw ShapeError("coefficient vector does not match basis size");
  }
  if (point.size() < static_cast<std::size_t>(spec_.dimension)) {
    throw ShapeError("point has fewer coordinates than the basis dimension");
  }
  // Separable: tabulate axis functions once.
  const int n = spec_.modes_per_axis;
  std::array<std::vector<double>, 3> tab;
  for (int a = 0; a < spec_.dimension; ++a) {
    tab[a].resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) tab[a][static_cast<std::size_t>(i)] = axis_function(i, point[a]);
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < size(); ++m) {
    double v = coeffs[static_cast<Eigen::Index>(m)];
    for (int a = 0; a < spec_.dimension; ++a) v *= tab[a][static_cast<std::size_t>(axis_modes_[m][a])];
    sum += v;
  }
  return sum;
}

int SpectralBasis::min_points_per_axis() const {
  const int n = spec_.modes_per_axis;
  if (spec_.kind == DomainKind::kDirichletCube) return n + 2;
  return 2 * (n / 2) + 1;
}

GridSpec SpectralBasis::default_grid() const {
  GridSpec g;
  g.kind = spec_.kind;
  g.side_length = spec_.side_length;
  g.dimension = spec_.dimension;
  const int interior = 2 * spec_.modes_per_axis + 1;
  g.points_per_axis = spec_.kind == DomainKind::kDirichletCube ? interior + 2 : interior;
  return g;
}

BasisPtr build_basis(const BasisSpec& spec) { return std::make_shared<const SpectralBasis>(spec); }

// ---------------------------------------------------------------------------
// Fields

SpectralField::SpectralField(BasisPtr b, Eigen::VectorXd c) : basis(std::move(b)), coeffs(std::move(c)) {
  if (!basis) throw ShapeError("spectral field without basis");
  if (static_cast<std::size_t>(coeffs.size()) != basis->size()) {
    throw ShapeError("coefficient count does not match basis mode count");
  }
}

SpectralField SpectralField::zero(BasisPtr b) {
  const auto n = static_cast<Eigen::Index>(b->size());
  return SpectralField(std::move(b), Eigen::VectorXd::Zero(n));
}

SpectralField SpectralField::unit(BasisPtr b, std::size_t mode, double value) {
  SpectralField f = zero(std::move(b));
  if (mode >= f.basis->size()) throw ShapeError("unit mode outside basis");
  f.coeffs[static_cast<Eigen::Index>(mode)] = value;
  return f;
}

// ---------------------------------------------------------------------------
// GridTransform

GridTransform::GridTransform(BasisPtr basis, const GridSpec& grid)
    : basis_(std::move(basis)), grid_(grid) {
  if (!basis_) throw ShapeError("transform without basis");
  const auto& spec = basis_->spec();
  if (grid.kind != spec.kind || grid.dimension != spec.dimension ||
      grid.side_length != spec.side_length) {
    throw ShapeError("grid domain does not match basis domain");
  }
  if (grid.points_per_axis < basis_->min_points_per_axis()) {
    throw ShapeError("grid too coarse for exact projection of basis modes");
  }
  const int N = grid.points_per_axis;
  const int n = spec.modes_per_axis;
  samples_.resize(N, n);
  derivatives_.resize(N, n);
  projector_.resize(n, N);
  for (int k = 0; k < N; ++k) {
    const double x = grid.coordinate(k);
    const double w = grid.weight(k);
    const bool boundary = spec.kind == DomainKind::kDirichletCube && (k == 0 || k == N - 1);
    for (int i = 0; i < n; ++i) {
      // Exact zeros on the Dirichlet boundary rather than sin(i pi) ~ 1e-16.
      const double phi = boundary ? 0.0 : basis_->axis_function(i, x);
      samples_(k, i) = phi;
      derivatives_(k, i) = basis_->axis_derivative(i, x);
      projector_(i, k) = w * phi;
    }
  }
  weights_.resize(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const MultiIndex idx = grid.unflatten(p);
    double w = 1.0;
    for (int a = 0; a < grid.dimension; ++a) w *= grid.weight(idx[a]);
    weights_[static_cast<Eigen::Index>(p)] = w;
  }
}

Eigen::VectorXd GridTransform::apply(const Eigen::VectorXd& in, bool to_grid,
                                     int derivative_axis) const {
  const int d = grid_.dimension;
  std::array<int, 3> dims{1, 1, 1};
  for (int a = 0; a < d; ++a) dims[a] = to_grid ? basis_->modes_per_axis() : grid_.points_per_axis;
  Eigen::VectorXd cur = in;
  for (int a = 0; a < d; ++a) {
    const Eigen::MatrixXd& m =
        to_grid ? (a == derivative_axis ? derivatives_ : samples_) : projector_;
    cur = apply_along_axis(cur, dims, d, a, m);
  }
  return cur;
}

Eigen::VectorXd GridTransform::synthesize(const Eigen::VectorXd& coeffs) const {
  if (static_cast<std::size_t>(coeffs.size()) != basis_->size()) {
    throw ShapeError("synthesize: coefficient vector does not match basis");
  }
  return apply(coeffs, true, -1);
}

Eigen::VectorXd GridTransform::synthesize_derivative(const Eigen::VectorXd& coeffs,
                                                     int axis) const {
  if (axis < 0 || axis >= grid_.dimension) throw ShapeError("derivative axis out of range");
  if (static_cast<std::size_t>(coeffs.size()) != basis_->size()) {
    throw ShapeError("synthesize: coefficient vector does not match basis");
  }
  return apply(coeffs, true, axis);
}

Eigen::VectorXd GridTransform::project(const Eigen::VectorXd& values) const {
  if (static_cast<std::size_t>(values.size()) != grid_.size()) {
    throw ShapeError("project: value array does not match grid");
  }
  return apply(values, false, -1);
}

double GridTransform::integrate(const Eigen::VectorXd& values) const {
  if (values.size() != weights_.size()) throw ShapeError("integrate: grid mismatch");
  return weights_.dot(values);
}

double GridTransform::inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  if (a.size() != weights_.size() || b.size() != weights_.size()) {
    throw ShapeError("inner: grid mismatch");
  }
  return (weights_.array() * a.array() * b.array()).sum();
}

Eigen::MatrixXd GridTransform::multiplication_matrix(const Eigen::VectorXd& multiplier) const {
  if (static_cast<std::size_t>(multiplier.size()) != grid_.size()) {
    throw ShapeError("multiplication_matrix: multiplier does not match grid");
  }
  const auto n = static_cast<Eigen::Index>(basis_->size());
  Eigen::MatrixXd out(n, n);
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    unit.setZero();
    unit[j] = 1.0;
    const Eigen::VectorXd phi = synthesize(unit);
    out.col(j) = project(multiplier.cwiseProduct(phi));
  }
  return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------
// Free operations

PhysicalField synthesize(const SpectralField& field, const GridSpec& grid) {
  GridTransform t(field.basis, grid);
  return PhysicalField{grid, t.synthesize(field.coeffs)};
}

SpectralField project(const PhysicalField& field, const BasisPtr& basis) {
  check_finite(field.values, "project");
  GridTransform t(basis, field.grid);
  return SpectralField(basis, t.project(field.values));
}

double inner_product(const PhysicalField& a, const PhysicalField& b) {
  if (!(a.grid == b.grid)) throw ShapeError("inner_product: grids differ");
  if (a.values.size() != b.values.size() ||
      static_cast<std::size_t>(a.values.size()) != a.grid.size()) {
    throw ShapeError("inner_product: value arrays do not match grid");
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < a.grid.size(); ++p) {
    const MultiIndex idx = a.grid.unflatten(p);
    double w = 1.0;
    for (int ax = 0; ax < a.grid.dimension; ++ax) w *= a.grid.weight(idx[ax]);
    const auto i = static_cast<Eigen::Index>(p);
    sum += w * a.values[i] * b.values[i];
  }
  return sum;
}

double poincare_constant(const SpectralBasis& basis) {
  if (basis.kind() != DomainKind::kDirichletCube) {
    throw NotApplicableError("Poincare constant undefined on a periodic basis (zero mode)");
  }
  return basis.min_eigenvalue();
}

SpectralField apply_spectral_multiplier(const SpectralField& field,
                                        const SpectralMultiplier& m) {
  SpectralField out = field;
  const auto& lambda = field.basis->eigenvalues();
  for (Eigen::Index i = 0; i < out.coeffs.size(); ++i) {
    const double factor = m(lambda[i]);
    if (!std::isfinite(factor)) {
      std::ostringstream os;
      os << "spectral multiplier is not finite at eigenvalue " << lambda[i];
      throw NumericError(os.str());
    }
    out.coeffs[i] *= factor;
  }
  return out;
}

PhysicalField sample_function(const GridSpec& grid,
                              const std::function<double(std::span<const double>)>& f) {
  PhysicalField out{grid, Eigen::VectorXd(static_cast<Eigen::Index>(grid.size()))};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto pt = grid.point(p);
    out.values[static_cast<Eigen::Index>(p)] =
        f(std::span<const double>(pt.data(), static_cast<std::size_t>(grid.dimension)));
  }
  return out;
}

SpectralField transfer(const SpectralField& field, const BasisPtr& target) {
  const auto& src = *field.basis;
  if (src.kind() != target->kind() || src.dimension() != target->dimension() ||
      src.side_length() != target->side_length()) {
    throw ShapeError("transfer: bases describe different domains");
  }
  SpectralField out = SpectralField::zero(target);
  const int n = src.modes_per_axis();
  for (std::size_t m = 0; m < target->size(); ++m) {
    const MultiIndex& idx = target->axis_modes(m);
    std::size_t flat = 0;
    bool inside = true;
    for (int a = 0; a < target->dimension(); ++a) {
      if (idx[a] >= n) {
        inside = false;
        break;
      }
      flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[a]);
    }
    if (inside) {
      out.coeffs[static_cast<Eigen::Index>(m)] = field.coeffs[static_cast<Eigen::Index>(flat)];
    }
  }
  return out;
}

}  // namespace specgal
