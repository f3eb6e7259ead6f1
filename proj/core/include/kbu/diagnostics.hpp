#pragma once

#include "kbu/ensemble.hpp"

namespace kbu {

/// Scalar time series on the shared grid (distances, precisions, indices).
struct DiagnosticSeries {
  TimeGrid grid;
  std::vector<double> values;
};

/// Trapezoidal rule over the full grid.
double trapezoid(const TimeGrid& grid, const std::vector<double>& values);

/// Precision-weighted distance sqrt((xi-mean)' P (xi-mean)).
double mahalanobis(const Vector& xi, const Vector& mean, const SpdMatrix& precision);
double mahalanobis(const Vector& xi, const Vector& mean, const Matrix& precision);

/// det(P), computed from the Cholesky factor.
double generalized_precision(const SpdMatrix& precision);

/// Row-wise diagonal dominance index min_j |p_jj| / sum_i |p_ji|, in [0, 1].
/// A matrix is diagonally dominant when the index is >= 0.5.
double diag_dominance(const Matrix& precision);

/// Minimum-energy value function of one filter run,
///   V(t, xi) = 1/2 (xi - xhat(t))' P(t) (xi - xhat(t))
///            + 1/2 integral_0^t || y - C xhat ||^2_{Q^-1} ds,
/// with the integral taken by the trapezoidal rule over grid nodes
/// 0..t_index. `run` must have been produced against `measurement`; the
/// integrand is the run's stored innovation residual.
double value_function(const KalmanRun& run, int t_index, const Vector& xi,
                      const Trajectory& measurement);

/// Independent oracle for value_function: discretizes the disturbance
/// reconstruction problem (forward-Euler dynamics, terminal state pinned to
/// xi) and solves the resulting equality-constrained quadratic program via
/// its KKT system. Small instances only.
double brute_force_energy(const SystemTuple& sys, const SharedModel& shared,
                          const Trajectory& measurement, int t_index, const Vector& xi);

/// Uniform average over the family of per-member value functions, its
/// gradient in xi, and the expected squared Mahalanobis distance. Member
/// residual integrals are accumulated once at construction.
class ExpectedEnergyEvaluator {
 public:
  explicit ExpectedEnergyEvaluator(const EnsembleResult& ensemble);

  double value(int t_index, const Vector& xi) const;
  /// grad_xi E(t, xi) = (1/N) sum_k P_k(t) (xi - xhat_k(t)).
  Vector gradient(int t_index, const Vector& xi) const;
  /// (1/N) sum_k || xi - xhat_k(t) ||^2_{P_k(t)}.
  double expected_squared_mahalanobis(int t_index, const Vector& xi) const;
  /// Spectral norm of sum_k P_k(t), the curvature scale N * ||Hessian||.
  double precision_sum_norm(int t_index) const;

 private:
  const EnsembleResult& ensemble_;
  std::vector<std::vector<double>> cumulative_integral_;  // [member][node]
};

/// E(t, xi) = (1/N) sum_k V_k(t, xi).
double expected_energy(const EnsembleResult& ensemble, int t_index, const Vector& xi,
                       const Trajectory& measurement);

/// Componentwise deviations || S_k - S_sigma_bar ||_p of every family member
/// from a designated one, using spectral matrix norms; p in {1, 2}.
struct SystemDeviation {
  std::vector<double> per_member;
  double expected;  // uniform mean of per_member
};
SystemDeviation system_deviation(const ParameterSpace& space, int sigma_bar_index, int p = 1);

/// Nodewise Mahalanobis distance of an estimate from a reference filter,
/// weighted by the reference's own precision: || est(t) - xhat(t) ||_{P(t)}.
DiagnosticSeries weighted_error_series(const Trajectory& estimate, const KalmanRun& reference);

}  // namespace kbu
