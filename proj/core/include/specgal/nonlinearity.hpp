#pragma once

#include <memory>
#include <string>
#include <vector>

namespace specgal {

enum class ProfileKind { kLinear, kExponential, kRegularizedPower };

const char* to_string(ProfileKind kind);

struct ClampInterval {
  double lo = -20.0;
  double hi = 20.0;
};

// Gas-in-porous-medium constants: P = c rho^gamma, V = -k grad P, with the
// power diffusivity regularized at scale epsilon and saturation bound M.
struct PorousMediumParams {
  double gamma = 1.0;
  double c = 1.0;
  double k = 1.0;
  double epsilon = 0.1;
  double saturation = 1.0;
};

struct ProfileValue {
  double F = 0.0;
  double dF = 0.0;
};

struct LipschitzBounds {
  double lower = 0.0;  // inf F' on the clamp interval
  double upper = 0.0;  // sup F' on the clamp interval
};

// Scalar nonlinearity F with F' > 0. Arguments are clamped into
// [clamp.lo, clamp.hi] before evaluation, so the profile is globally Lipschitz
// with constant sup F' and F' stays positive. Immutable.
class NonlinearityProfile {
 public:
  NonlinearityProfile();  // linear, c = 1

  ProfileKind kind() const { return kind_; }
  const ClampInterval& clamp() const { return clamp_; }
  double clamped(double u) const;

  ProfileValue eval(double u) const;
  double F(double u) const { return eval(u).F; }
  double dF(double u) const { return eval(u).dF; }

  LipschitzBounds lipschitz_bounds() const;

  // Parameters, meaningful for the matching kind only.
  double linear_slope() const { return slope_; }
  double k0() const { return k0_; }
  const PorousMediumParams& porous() const { return porous_; }
  // Regularized power diffusivity (rho^2 + eps^2)^(gamma/2).
  double diffusivity(double rho) const;

  std::string describe() const;

  friend NonlinearityProfile make_linear_profile(double c, ClampInterval clamp);
  friend NonlinearityProfile make_exponential_profile(double k0, ClampInterval clamp);
  friend NonlinearityProfile make_regularized_power_profile(const PorousMediumParams& params);

 private:
  double exact_dF(double u) const;

  ProfileKind kind_ = ProfileKind::kLinear;
  ClampInterval clamp_{};
  double slope_ = 1.0;
  double k0_ = 0.0;
  PorousMediumParams porous_{};
  // Regularized power: antiderivative of F' tabulated on a uniform grid over
  // the clamp interval, evaluated by cubic Hermite interpolation using the
  // exact F' at the nodes.
  std::shared_ptr<const std::vector<double>> table_;
  double table_step_ = 0.0;
};

NonlinearityProfile make_linear_profile(double c, ClampInterval clamp = {});
// F(u) = (k0/2) u - exp(-u), F'(u) = k0/2 + exp(-u).
NonlinearityProfile make_exponential_profile(double k0, ClampInterval clamp = {});
// F' = gamma c k (rho^2 + eps^2)^(gamma/2) on [0, M], F(0) = 0.
NonlinearityProfile make_regularized_power_profile(const PorousMediumParams& params);

}  // namespace specgal
