#include "kbu/estimators.hpp"

#include <sstream>

namespace kbu {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::expected_matrices: return "expected_matrices";
    case EstimatorKind::expected_filter: return "expected_filter";
    case EstimatorKind::energy_min: return "energy_min";
    case EstimatorKind::expected_gain: return "expected_gain";
  }
  return "unknown";
}

std::optional<EstimatorKind> estimator_kind_from_string(std::string_view name) {
  for (EstimatorKind kind : all_estimator_kinds()) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

const std::vector<EstimatorKind>& all_estimator_kinds() {
  static const std::vector<EstimatorKind> kinds = {
      EstimatorKind::expected_matrices, EstimatorKind::expected_filter,
      EstimatorKind::energy_min, EstimatorKind::expected_gain};
  return kinds;
}

SystemTuple mean_system(const ParameterSpace& space) {
  if (space.size() == 0) throw ConfigError("mean_system: empty parameter space");
  const double w = 1.0 / space.size();
  Matrix a = Matrix::Zero(space.members.front().a.rows(), space.members.front().a.cols());
  Matrix gamma = Matrix::Zero(space.members.front().gamma.dim(), space.members.front().gamma.dim());
  Matrix r = Matrix::Zero(space.members.front().r.dim(), space.members.front().r.dim());
  Matrix q = Matrix::Zero(space.members.front().q.dim(), space.members.front().q.dim());
  for (const auto& m : space.members) {
    a += w * m.a;
    gamma += w * m.gamma.matrix();
    r += w * m.r.matrix();
    q += w * m.q.matrix();
  }
  // Means of SPD matrices remain SPD.
  return SystemTuple{std::move(a), SpdMatrix(std::move(gamma)), SpdMatrix(std::move(r)),
                     SpdMatrix(std::move(q))};
}

EstimatorOutput expected_matrices_estimator(const ParameterSpace& space,
                                            const SharedModel& shared,
                                            const Trajectory& measurement, const TimeGrid& grid,
                                            const IntegratorConfig& config) {
  const SystemTuple averaged = mean_system(space);
  RiccatiSolution riccati = make_solution(averaged, shared, grid, config);
  KalmanRun run = run_filter(averaged, shared, measurement, riccati, grid, config);
  return EstimatorOutput{EstimatorKind::expected_matrices, std::move(run.estimate),
                         std::move(run.riccati.covariance)};
}

EstimatorOutput expected_filter_estimator(const EnsembleResult& ensemble) {
  if (ensemble.size() == 0) throw ConfigError("expected_filter_estimator: empty ensemble");
  const int nodes = ensemble.grid.num_nodes();
  const double w = 1.0 / ensemble.size();

  std::vector<Vector> mean(static_cast<size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    Vector acc = Vector::Zero(ensemble.runs.front().estimate.dim());
    for (const auto& run : ensemble.runs) acc += run.estimate[j];
    mean[static_cast<size_t>(j)] = w * acc;
  }
  return EstimatorOutput{EstimatorKind::expected_filter,
                         Trajectory(ensemble.grid, std::move(mean)), std::nullopt};
}

EstimatorOutput energy_min_estimator(const EnsembleResult& ensemble) {
  if (ensemble.size() == 0) throw ConfigError("energy_min_estimator: empty ensemble");
  const int nodes = ensemble.grid.num_nodes();
  const Eigen::Index n = ensemble.runs.front().estimate.dim();

  std::vector<Vector> estimate(static_cast<size_t>(nodes));
  std::vector<Matrix> precision_sum(static_cast<size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    Matrix p_total = Matrix::Zero(n, n);
    Vector rhs = Vector::Zero(n);
    for (const auto& run : ensemble.runs) {
      const Matrix& p_k = run.riccati.precision[j];
      p_total += p_k;
      rhs += p_k * run.estimate[j];
    }
    Eigen::LLT<Matrix> llt(p_total);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "energy_min_estimator: summed precision not positive definite at node " << j;
      throw NumericalError(os.str());
    }
    estimate[static_cast<size_t>(j)] = llt.solve(rhs);
    precision_sum[static_cast<size_t>(j)] = std::move(p_total);
  }

  return EstimatorOutput{EstimatorKind::energy_min,
                         Trajectory(ensemble.grid, std::move(estimate)),
                         MatrixTrajectory(ensemble.grid, std::move(precision_sum), /*spd=*/true)};
}

EstimatorOutput expected_gain_estimator(const ParameterSpace& space,
                                        const EnsembleResult& ensemble,
                                        const SharedModel& shared, const Trajectory& measurement,
                                        const TimeGrid& grid, const IntegratorConfig& config) {
  if (ensemble.size() != space.size())
    throw ConfigError("expected_gain_estimator: ensemble and space sizes differ");
  const int nodes = grid.num_nodes();
  const Eigen::Index n = ensemble.runs.front().estimate.dim();
  const double w = 1.0 / ensemble.size();

  std::vector<Matrix> mean_cov(static_cast<size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    Matrix acc = Matrix::Zero(n, n);
    for (const auto& run : ensemble.runs) acc += run.riccati.covariance[j];
    mean_cov[static_cast<size_t>(j)] = w * acc;
  }
  MatrixTrajectory averaged_cov(grid, std::move(mean_cov), /*spd=*/true);

  const SystemTuple averaged = mean_system(space);
  Trajectory estimate =
      run_filter_with_covariance(averaged, shared, measurement, averaged_cov, grid, config);
  return EstimatorOutput{EstimatorKind::expected_gain, std::move(estimate),
                         std::move(averaged_cov)};
}

}  // namespace kbu
