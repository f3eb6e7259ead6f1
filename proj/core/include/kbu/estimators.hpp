#pragma once

#include <optional>
#include <string_view>

#include "kbu/ensemble.hpp"

namespace kbu {

enum class EstimatorKind {
  expected_matrices,  // one filter on the componentwise-averaged tuple
  expected_filter,    // unweighted mean of the member filters
  energy_min,         // precision-weighted mean, minimizer of the expected energy
  expected_gain,      // averaged-tuple filter driven by the averaged covariance
};

std::string_view to_string(EstimatorKind kind);
std::optional<EstimatorKind> estimator_kind_from_string(std::string_view name);
/// All four kinds in their canonical (output) order.
const std::vector<EstimatorKind>& all_estimator_kinds();

/// An ensemble state estimate. `aux` carries the averaged covariance for the
/// expected_matrices / expected_gain kinds and the summed precision for
/// energy_min; it is empty for expected_filter.
struct EstimatorOutput {
  EstimatorKind kind;
  Trajectory estimate;
  std::optional<MatrixTrajectory> aux;
};

/// Componentwise mean (1/N) sum of (A_k, Gamma_k, R_k, Q_k) over the family.
SystemTuple mean_system(const ParameterSpace& space);

/// Averages the four uncertain matrices, then runs a single Kalman filter on
/// the averaged tuple.
EstimatorOutput expected_matrices_estimator(const ParameterSpace& space,
                                            const SharedModel& shared,
                                            const Trajectory& measurement, const TimeGrid& grid,
                                            const IntegratorConfig& config);

/// Nodewise unweighted mean of the member estimates.
EstimatorOutput expected_filter_estimator(const EnsembleResult& ensemble);

/// Nodewise precision-weighted mean: solves (sum_k P_k) xi = sum_k P_k xhat_k
/// by Cholesky at every node. The unique minimizer of the expected energy.
EstimatorOutput energy_min_estimator(const EnsembleResult& ensemble);

/// Filter on the averaged tuple with the gain covariance replaced by the
/// averaged member covariance (1/N) sum_k Pi_k(t).
EstimatorOutput expected_gain_estimator(const ParameterSpace& space,
                                        const EnsembleResult& ensemble,
                                        const SharedModel& shared, const Trajectory& measurement,
                                        const TimeGrid& grid, const IntegratorConfig& config);

}  // namespace kbu
