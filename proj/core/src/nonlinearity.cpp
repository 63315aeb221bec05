#include "specgal/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "specgal/errors.hpp"

namespace specgal {

namespace {

constexpr int kTableIntervals = 4096;

void check_clamp(const ClampInterval& c) {
  if (!(c.lo < c.hi) || !std::isfinite(c.lo) || !std::isfinite(c.hi)) {
    throw ConfigurationError("clamp interval must satisfy lo < hi with finite ends");
  }
}

}  // namespace

const char* to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::kLinear:
      return "linear";
    case ProfileKind::kExponential:
      return "exponential";
    case ProfileKind::kRegularizedPower:
      return "regularized-power";
  }
  return "unknown";
}

NonlinearityProfile::NonlinearityProfile() = default;

double NonlinearityProfile::clamped(double u) const { return std::clamp(u, clamp_.lo, clamp_.hi); }

double NonlinearityProfile::diffusivity(double rho) const {
  const auto& p = porous_;
  return std::pow(rho * rho + p.epsilon * p.epsilon, 0.5 * p.gamma);
}

double NonlinearityProfile::exact_dF(double u) const {
  switch (kind_) {
    case ProfileKind::kLinear:
      return slope_;
    case ProfileKind::kExponential:
      return 0.5 * k0_ + std::exp(-u);
    case ProfileKind::kRegularizedPower:
      return porous_.gamma * porous_.c * porous_.k * diffusivity(u);
  }
  return 0.0;
}

ProfileValue NonlinearityProfile::eval(double u) const {
  if (!std::isfinite(u)) throw NumericError("nonlinearity evaluated at a non-finite value");
  const double x = clamped(u);
  switch (kind_) {
    case ProfileKind::kLinear:
      return {slope_ * x, slope_};
    case ProfileKind::kExponential: {
      const double e = std::exp(-x);
      return {0.5 * k0_ * x - e, 0.5 * k0_ + e};
    }
    case ProfileKind::kRegularizedPower: {
      const auto& tab = *table_;
      const double s = (x - clamp_.lo) / table_step_;
      auto i = static_cast<int>(s);
      i = std::clamp(i, 0, kTableIntervals - 1);
      const double h = table_step_;
      const double x0 = clamp_.lo + i * h;
      const double t = (x - x0) / h;
      const double f0 = tab[static_cast<std::size_t>(i)];
      const double f1 = tab[static_cast<std::size_t>(i) + 1];
      const double d0 = exact_dF(x0) * h;
      const double d1 = exact_dF(x0 + h) * h;
      const double t2 = t * t;
      const double t3 = t2 * t;
      const double F = (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * d0 +
                       (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * d1;
      return {F, exact_dF(x)};
    }
  }
  return {};
}

LipschitzBounds NonlinearityProfile::lipschitz_bounds() const {
  switch (kind_) {
    case ProfileKind::kLinear:
      return {slope_, slope_};
    case ProfileKind::kExponential:
      // F' decreasing.
      return {exact_dF(clamp_.hi), exact_dF(clamp_.lo)};
    case ProfileKind::kRegularizedPower: {
      // F' increasing in |rho|.
      const double nearest = (clamp_.lo <= 0.0 && clamp_.hi >= 0.0) ? 0.0
                             : (clamp_.lo > 0.0)                     ? clamp_.lo
                                                                     : clamp_.hi;
      const double farthest = std::max(std::abs(clamp_.lo), std::abs(clamp_.hi));
      return {exact_dF(nearest), exact_dF(farthest)};
    }
  }
  return {};
}

std::string NonlinearityProfile::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case ProfileKind::kLinear:
      os << "(c=" << slope_ << ")";
      break;
    case ProfileKind::kExponential:
      os << "(k0=" << k0_ << ")";
      break;
    case ProfileKind::kRegularizedPower:
      os << "(gamma=" << porous_.gamma << ",c=" << porous_.c << ",k=" << porous_.k
         << ",eps=" << porous_.epsilon << ",M=" << porous_.saturation << ")";
      break;
  }
  os << " clamp[" << clamp_.lo << "," << clamp_.hi << "]";
  return os.str();
}

NonlinearityProfile make_linear_profile(double c, ClampInterval clamp) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigurationError("linear profile slope must be > 0");
  check_clamp(clamp);
  NonlinearityProfile p;
  p.kind_ = ProfileKind::kLinear;
  p.slope_ = c;
  p.clamp_ = clamp;
  return p;
}

NonlinearityProfile make_exponential_profile(double k0, ClampInterval clamp) {
  if (!(k0 > 0.0) || !std::isfinite(k0)) throw ConfigurationError("exponential profile needs k0 > 0");
  check_clamp(clamp);
  NonlinearityProfile p;
  p.kind_ = ProfileKind::kExponential;
  p.k0_ = k0;
  p.clamp_ = clamp;
  return p;
}

NonlinearityProfile make_regularized_power_profile(const PorousMediumParams& params) {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(params.epsilon)) throw ConfigurationError("porous medium: epsilon must be > 0");
  if (!positive(params.saturation)) throw ConfigurationError("porous medium: saturation M must be > 0");
  if (!positive(params.gamma) || !positive(params.c) || !positive(params.k)) {
    throw ConfigurationError("porous medium: gamma, c and k must be > 0");
  }
  NonlinearityProfile p;
  p.kind_ = ProfileKind::kRegularizedPower;
  p.porous_ = params;
  p.clamp_ = {0.0, params.saturation};

  // Cumulative antiderivative from 0, exact to quadrature precision per panel.
  p.table_step_ = params.saturation / kTableIntervals;
  auto table = std::make_shared<std::vector<double>>(kTableIntervals + 1, 0.0);
  const auto integrand = [&p](double x) { return p.exact_dF(x); };
  for (int i = 0; i < kTableIntervals; ++i) {
    const double a = i * p.table_step_;
    const double b = a + p.table_step_;
    (*table)[static_cast<std::size_t>(i) + 1] =
        (*table)[static_cast<std::size_t>(i)] +
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, a, b, 0, 0);
  }
  p.table_ = std::move(table);
  return p;
}

}  // namespace specgal
