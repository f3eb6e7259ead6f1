#include "kbu/filter.hpp"

namespace kbu {

Trajectory run_filter_with_covariance(const SystemTuple& sys, const SharedModel& shared,
                                      const Trajectory& measurement,
                                      const MatrixTrajectory& covariance, const TimeGrid& grid,
                                      const IntegratorConfig& config) {
  validate_dimensions(sys, shared);
  if (measurement.grid() != grid || covariance.grid() != grid)
    throw ConfigError("run_filter: measurement and covariance must live on the filter grid");
  if (measurement.dim() != shared.c.rows())
    throw ConfigError("run_filter: measurement dimension must match the output map");

  const Matrix a = sys.a;
  const Matrix c = shared.c;
  const Matrix q_inv = sys.q.inverse();
  const bool forced = shared.forcing.has_value();

  OdeRhs rhs = [&](double t, const Vector& xhat, Vector& dxdt) {
    const Vector y_t = evaluate(measurement, t);
    const Matrix pi_t = evaluate(covariance, t);
    dxdt = a * xhat + pi_t * (c.transpose() * (q_inv * (y_t - c * xhat)));
    if (forced) dxdt += (*shared.forcing)(t);
  };

  return integrate(rhs, shared.x0, grid, config);
}

KalmanRun run_filter(const SystemTuple& sys, const SharedModel& shared,
                     const Trajectory& measurement, const RiccatiSolution& riccati,
                     const TimeGrid& grid, const IntegratorConfig& config) {
  Trajectory estimate =
      run_filter_with_covariance(sys, shared, measurement, riccati.covariance, grid, config);

  std::vector<Vector> residual;
  residual.reserve(static_cast<size_t>(grid.num_nodes()));
  for (int j = 0; j < grid.num_nodes(); ++j) {
    residual.push_back(measurement[j] - shared.c * estimate[j]);
  }

  return KalmanRun{std::move(estimate), Trajectory(grid, std::move(residual)), riccati, sys};
}

}  // namespace kbu
