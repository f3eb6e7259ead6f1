#include "kbu/riccati.hpp"

#include <sstream>
#include <utility>

namespace kbu {

namespace {

// Flattening convention for matrix ODE states: column-major, matching
// Eigen::Map's default.
Vector flatten(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unflatten(const Vector& v, Eigen::Index n) {
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

// Re-symmetrize integrator output and verify positive definiteness node by node.
std::vector<Matrix> postprocess_nodes(const Trajectory& flat, Eigen::Index n,
                                      const TimeGrid& grid, const char* what) {
  std::vector<Matrix> nodes;
  nodes.reserve(static_cast<size_t>(grid.num_nodes()));
  for (int j = 0; j < grid.num_nodes(); ++j) {
    Matrix x = unflatten(flat[j], n);
    x = ((x + x.transpose()) / 2.0).eval();
    Eigen::LLT<Matrix> llt(x);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << what << ": matrix lost positive definiteness at node " << j
         << " (t = " << grid.node(j) << ")";
      throw NumericalError(os.str());
    }
    nodes.push_back(std::move(x));
  }
  return nodes;
}

}  // namespace

MatrixTrajectory solve_covariance_riccati(const SystemTuple& sys, const SharedModel& shared,
                                          const TimeGrid& grid, const IntegratorConfig& config) {
  validate_dimensions(sys, shared);
  const Eigen::Index n = sys.a.rows();
  const Matrix a = sys.a;
  const Matrix innovation_weight = shared.c.transpose() * sys.q.inverse() * shared.c;  // C'Q^-1C
  const Matrix noise_input = shared.b * sys.r.matrix() * shared.b.transpose();         // BRB'

  OdeRhs rhs = [&, n](double /*t*/, const Vector& y, Vector& dydt) {
    const Matrix pi = unflatten(y, n);
    const Matrix d = a * pi + pi * a.transpose() - pi * innovation_weight * pi + noise_input;
    dydt = flatten(d);
  };

  Trajectory flat = integrate(rhs, flatten(sys.gamma.matrix()), grid, config);
  return MatrixTrajectory(grid, postprocess_nodes(flat, n, grid, "covariance Riccati"),
                          /*spd=*/true);
}

MatrixTrajectory solve_precision_riccati(const SystemTuple& sys, const SharedModel& shared,
                                         const TimeGrid& grid, const IntegratorConfig& config) {
  validate_dimensions(sys, shared);
  const Eigen::Index n = sys.a.rows();
  const Matrix a = sys.a;
  const Matrix innovation_weight = shared.c.transpose() * sys.q.inverse() * shared.c;
  const Matrix noise_input = shared.b * sys.r.matrix() * shared.b.transpose();

  OdeRhs rhs = [&, n](double /*t*/, const Vector& y, Vector& dydt) {
    const Matrix p = unflatten(y, n);
    const Matrix d = -a.transpose() * p - p * a - p * noise_input * p + innovation_weight;
    dydt = flatten(d);
  };

  Trajectory flat = integrate(rhs, flatten(sys.gamma.inverse()), grid, config);
  return MatrixTrajectory(grid, postprocess_nodes(flat, n, grid, "precision Riccati"),
                          /*spd=*/true);
}

RiccatiSolution make_solution(const SystemTuple& sys, const SharedModel& shared,
                              const TimeGrid& grid, const IntegratorConfig& config) {
  MatrixTrajectory covariance = solve_covariance_riccati(sys, shared, grid, config);
  MatrixTrajectory precision = solve_precision_riccati(sys, shared, grid, config);

  const Eigen::Index n = covariance.dim();
  const Matrix identity = Matrix::Identity(n, n);
  bool consistent = true;
  for (int j = 0; j < grid.num_nodes(); ++j) {
    const double gap = (covariance[j] * precision[j] - identity).cwiseAbs().maxCoeff();
    if (gap > kCovariancePrecisionTol) {
      consistent = false;
      break;
    }
  }

  if (consistent) {
    return RiccatiSolution{std::move(covariance), std::move(precision), false};
  }

  std::vector<Matrix> inverted;
  inverted.reserve(static_cast<size_t>(grid.num_nodes()));
  for (int j = 0; j < grid.num_nodes(); ++j) {
    Eigen::LLT<Matrix> llt(covariance[j]);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "make_solution: covariance not invertible at node " << j;
      throw NumericalError(os.str());
    }
    Matrix inv = llt.solve(identity);
    inverted.push_back(((inv + inv.transpose()) / 2.0).eval());
  }
  MatrixTrajectory fallback(grid, std::move(inverted), /*spd=*/true);
  return RiccatiSolution{std::move(covariance), std::move(fallback), true};
}

}  // namespace kbu
