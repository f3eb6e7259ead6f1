#pragma once

#include "kbu/model.hpp"
#include "kbu/odeint.hpp"
#include "kbu/riccati.hpp"

namespace kbu {

/// One Kalman filter integration: the state estimate, its innovation
/// residual y - C xhat, the Riccati pair it used, and the defining tuple.
struct KalmanRun {
  Trajectory estimate;   // xhat(.)
  Trajectory residual;   // y(.) - C xhat(.), nodewise
  RiccatiSolution riccati;
  SystemTuple sys;
};

/// Integrates the filter ODE
///   dxhat/dt = A xhat + f(t) + Pi(t) C' Q^-1 (y(t) - C xhat),  xhat(0) = x0,
/// with Pi(t) and y(t) evaluated by linear interpolation between grid nodes.
/// Only `sys.a` and `sys.q` enter the equation; the covariance trajectory
/// stands in for the gain and need not solve this tuple's Riccati equation
/// (the expected-gain estimator relies on exactly that).
Trajectory run_filter_with_covariance(const SystemTuple& sys, const SharedModel& shared,
                                      const Trajectory& measurement,
                                      const MatrixTrajectory& covariance, const TimeGrid& grid,
                                      const IntegratorConfig& config);

/// Runs the filter with the covariance trajectory of `riccati` and bundles
/// the result with the residual series.
KalmanRun run_filter(const SystemTuple& sys, const SharedModel& shared,
                     const Trajectory& measurement, const RiccatiSolution& riccati,
                     const TimeGrid& grid, const IntegratorConfig& config);

}  // namespace kbu
