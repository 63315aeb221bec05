#include "specgal/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "specgal/errors.hpp"

namespace specgal {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
// b - b_hat, with b_hat the embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, const StepControl& c) {
  if (err.size() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = c.atol + c.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

double initial_step(const OdeRhs& rhs, double t0, const Eigen::VectorXd& y0,
                    const Eigen::VectorXd& f0, const StepControl& c, std::size_t& evals) {
  const auto scale = [&](const Eigen::VectorXd& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double sc = c.atol + c.rtol * std::abs(y0[i]);
      s += (v[i] / sc) * (v[i] / sc);
    }
    return v.size() ? std::sqrt(s / static_cast<double>(v.size())) : 0.0;
  };
  const double d0 = scale(y0);
  const double d1 = scale(f0);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  Eigen::VectorXd y1 = y0 + h0 * f0;
  Eigen::VectorXd f1(y0.size());
  rhs(t0 + h0, y1, f1);
  ++evals;
  const double d2 = scale(f1 - f0) / h0;
  const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                              : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
  return std::min(100.0 * h0, h1);
}

}  // namespace

std::vector<double> uniform_times(double horizon, std::size_t intervals) {
  if (intervals == 0) intervals = 1;
  std::vector<double> t(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    t[i] = horizon * static_cast<double>(i) / static_cast<double>(intervals);
  }
  t.back() = horizon;
  return t;
}

OdeSolution integrate_dopri5(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                             std::span<const double> output_times, const StepControl& control) {
  if (output_times.empty()) throw InvalidParameterError("no output times requested");
  for (std::size_t i = 1; i < output_times.size(); ++i) {
    if (!(output_times[i] > output_times[i - 1])) {
      throw InvalidParameterError("output times must be strictly increasing");
    }
  }
  if (!(control.rtol > 0.0) || !(control.atol >= 0.0)) {
    throw InvalidParameterError("tolerances must be positive");
  }
  if (!y0.allFinite()) throw NumericError("initial state has non-finite entries");

  OdeSolution sol;
  sol.times.reserve(output_times.size());
  sol.states.reserve(output_times.size());

  double t = output_times.front();
  Eigen::VectorXd y = y0;
  sol.times.push_back(t);
  sol.states.push_back(y);
  if (output_times.size() == 1) return sol;

  const Eigen::Index n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  rhs(t, y, k1);
  ++sol.rhs_evaluations;

  const double span_total = output_times.back() - t;
  double h = control.initial_step > 0.0
                 ? control.initial_step
                 : initial_step(rhs, t, y, k1, control, sol.rhs_evaluations);
  const double h_max = control.max_step > 0.0 ? control.max_step : span_total;
  h = std::min(h, h_max);
  double err_prev = 1e-4;

  std::size_t next = 1;
  std::size_t steps = 0;
  while (next < output_times.size()) {
    const double target = output_times[next];
    bool hit = false;
    double step = h;
    if (t + step >= target - 1e-14 * std::max(1.0, std::abs(target))) {
      step = target - t;
      hit = true;
    }
    if (step < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "step size underflow at t=" << t;
      throw IntegrationFailure(os.str(), t);
    }
    if (++steps > control.max_steps) {
      throw IntegrationFailure("maximum number of steps exceeded", t);
    }

    ytmp = y + step * a21 * k1;
    rhs(t + c2 * step, ytmp, k2);
    ytmp = y + step * (a31 * k1 + a32 * k2);
    rhs(t + c3 * step, ytmp, k3);
    ytmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * step, ytmp, k4);
    ytmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * step, ytmp, k5);
    ytmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + step, ytmp, k6);
    ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double t_new = hit ? target : t + step;
    rhs(t_new, ynew, k7);
    sol.rhs_evaluations += 6;

    err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = error_norm(err, y, ynew, control);
    if (!std::isfinite(en) || !ynew.allFinite()) en = 1e10;

    if (en <= 1.0) {
      t = t_new;
      y = ynew;
      k1 = k7;  // FSAL
      ++sol.accepted_steps;
      // PI step-size controller (Hairer & Wanner II.4).
      const double en_c = std::max(en, 1e-10);
      double fac = 0.9 * std::pow(en_c, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(en, 1e-4);
      // A step shortened to land on an output time does not shrink the next one.
      const double base = hit ? std::max(step, h) : step;
      h = std::min(base * fac, h_max);
      if (hit) {
        sol.times.push_back(t);
        sol.states.push_back(y);
        ++next;
      }
    } else {
      ++sol.rejected_steps;
      const double fac = std::max(0.2, 0.9 * std::pow(en, -1.0 / 5.0));
      h = step * fac;
    }
  }
  return sol;
}

}  // namespace specgal
