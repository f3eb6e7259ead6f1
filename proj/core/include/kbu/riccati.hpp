#pragma once

#include "kbu/model.hpp"
#include "kbu/odeint.hpp"

namespace kbu {

/// Max-norm tolerance for the nodewise covariance-precision consistency
/// check Pi(t_j) P(t_j) = I.
inline constexpr double kCovariancePrecisionTol = 1e-6;

/// Error covariance Pi and precision P = Pi^-1 of one Kalman filter, sampled
/// on a common grid. Both are integrated independently; `make_solution`
/// verifies their mutual consistency.
struct RiccatiSolution {
  MatrixTrajectory covariance;  // Pi(.)
  MatrixTrajectory precision;   // P(.)
  /// Set when the independently integrated precision violated the
  /// consistency tolerance and was replaced by nodewise inversion of Pi.
  bool precision_from_inverse = false;
};

/// Solves dPi/dt = A Pi + Pi A' - Pi C' Q^-1 C Pi + B R B', Pi(0) = Gamma.
/// Every stored node is re-symmetrized and checked positive definite.
MatrixTrajectory solve_covariance_riccati(const SystemTuple& sys, const SharedModel& shared,
                                          const TimeGrid& grid, const IntegratorConfig& config);

/// Solves dP/dt = -A' P - P A - P B R B' P + C' Q^-1 C, P(0) = Gamma^-1.
MatrixTrajectory solve_precision_riccati(const SystemTuple& sys, const SharedModel& shared,
                                         const TimeGrid& grid, const IntegratorConfig& config);

/// Integrates both forms and checks || Pi(t_j) P(t_j) - I ||_max at every
/// node. On violation the precision trajectory is replaced by nodewise
/// Cholesky inversion of Pi and `precision_from_inverse` is set.
RiccatiSolution make_solution(const SystemTuple& sys, const SharedModel& shared,
                              const TimeGrid& grid, const IntegratorConfig& config);

}  // namespace kbu
