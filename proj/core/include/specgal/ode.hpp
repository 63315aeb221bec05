#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace specgal {

// Error control for the embedded Dormand-Prince 5(4) pair.
struct StepControl {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 selects a starting step automatically
  double max_step = 0.0;      // 0 means unbounded
  std::size_t max_steps = 5'000'000;
};

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct OdeSolution {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
};

// Integrates y' = f(t, y) from output_times.front() and records the state at
// every requested output time; steps are shortened to land on them exactly.
// Fully deterministic: identical inputs give bitwise identical outputs.
//
// Throws IntegrationFailure (carrying the last accepted time) when the step
// size underflows or max_steps is exceeded.
OdeSolution integrate_dopri5(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                             std::span<const double> output_times, const StepControl& control);

// n+1 equispaced times on [0, T].
std::vector<double> uniform_times(double horizon, std::size_t intervals);

}  // namespace specgal
