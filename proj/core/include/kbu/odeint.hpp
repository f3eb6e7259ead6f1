#pragma once

#include <functional>
#include <optional>

#include "kbu/model.hpp"

namespace kbu {

/// Tolerances and step budget for the adaptive integrator.
struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  long max_steps = 10'000'000;
  std::optional<double> initial_step;
};

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

/// Integrates dy/dt = rhs(t, y) from grid.t_start() to grid.t_end() with an
/// embedded Dormand-Prince 5(4) pair and PI-free step control. Steps are
/// clipped so that every grid node is hit exactly; the returned trajectory
/// holds the state at each node.
///
/// Throws ConfigError for invalid tolerances, NumericalError when the RHS
/// produces non-finite values or the step size underflows, and
/// NonconvergenceError when max_steps is exhausted.
Trajectory integrate(const OdeRhs& rhs, const Vector& y0, const TimeGrid& grid,
                     const IntegratorConfig& config = {});

}  // namespace kbu
