#include "kbu/diagnostics.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace kbu {

namespace {

double quadratic_form(const Vector& d, const Matrix& p) {
  return d.dot(p * d);
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace

double trapezoid(const TimeGrid& grid, const std::vector<double>& values) {
  if (values.size() != static_cast<size_t>(grid.num_nodes()))
    throw ConfigError("trapezoid: values must have one entry per grid node");
  double acc = 0.0;
  for (int j = 0; j < grid.num_intervals(); ++j) {
    const double h = grid.node(j + 1) - grid.node(j);
    acc += 0.5 * h * (values[static_cast<size_t>(j)] + values[static_cast<size_t>(j) + 1]);
  }
  return acc;
}

double mahalanobis(const Vector& xi, const Vector& mean, const SpdMatrix& precision) {
  return mahalanobis(xi, mean, precision.matrix());
}

double mahalanobis(const Vector& xi, const Vector& mean, const Matrix& precision) {
  if (xi.size() != mean.size() || precision.rows() != xi.size())
    throw ConfigError("mahalanobis: dimension mismatch");
  const Vector d = xi - mean;
  return std::sqrt(std::max(0.0, quadratic_form(d, precision)));
}

double generalized_precision(const SpdMatrix& precision) {
  return precision.determinant();
}

double diag_dominance(const Matrix& precision) {
  if (precision.rows() != precision.cols() || precision.rows() == 0)
    throw ConfigError("diag_dominance: matrix must be square and non-empty");
  double worst = 1.0;
  for (Eigen::Index j = 0; j < precision.rows(); ++j) {
    const double row_sum = precision.row(j).cwiseAbs().sum();
    if (row_sum == 0.0) throw NumericalError("diag_dominance: zero row");
    worst = std::min(worst, std::abs(precision(j, j)) / row_sum);
  }
  return worst;
}

double value_function(const KalmanRun& run, int t_index, const Vector& xi,
                      const Trajectory& measurement) {
  const TimeGrid& grid = run.estimate.grid();
  if (t_index < 0 || t_index >= grid.num_nodes())
    throw ConfigError("value_function: t_index out of range");
  if (measurement.grid() != grid || measurement.dim() != run.residual.dim())
    throw ConfigError("value_function: measurement does not match the run");

  const Matrix q_inv = run.sys.q.inverse();
  double integral = 0.0;
  double prev = quadratic_form(run.residual[0], q_inv);
  for (int j = 1; j <= t_index; ++j) {
    const double cur = quadratic_form(run.residual[j], q_inv);
    integral += 0.5 * (grid.node(j) - grid.node(j - 1)) * (prev + cur);
    prev = cur;
  }

  const Vector d = xi - run.estimate[t_index];
  return 0.5 * quadratic_form(d, run.riccati.precision[t_index]) + 0.5 * integral;
}

double brute_force_energy(const SystemTuple& sys, const SharedModel& shared,
                          const Trajectory& measurement, int t_index, const Vector& xi) {
  validate_dimensions(sys, shared);
  const TimeGrid& grid = measurement.grid();
  if (t_index < 1 || t_index >= grid.num_nodes())
    throw ConfigError("brute_force_energy: t_index must name a grid node past t = 0");

  const int steps = t_index;  // Euler intervals
  const Eigen::Index n = shared.x0.size();
  const Eigen::Index m = shared.b.cols();
  const long num_states = static_cast<long>(n) * (steps + 1);
  const long num_controls = static_cast<long>(m) * steps;
  const long nz = num_states + num_controls;
  if (nz > 5000)
    throw ConfigError("brute_force_energy: instance too large for the dense KKT oracle");
  const long nc = static_cast<long>(n) * steps + n;  // dynamics + terminal

  const Matrix gamma_inv = sys.gamma.inverse();
  const Matrix r_inv = sys.r.inverse();
  const Matrix q_inv = sys.q.inverse();
  const Matrix cqc = shared.c.transpose() * q_inv * shared.c;

  const auto x_off = [&](int j) { return static_cast<long>(n) * j; };
  const auto v_off = [&](int j) { return num_states + static_cast<long>(m) * j; };

  Matrix h = Matrix::Zero(nz, nz);
  Vector g = Vector::Zero(nz);
  double constant = 0.0;

  // Initial-error term 1/2 || x_0 - x0 ||^2_{Gamma^-1}.
  h.block(x_off(0), x_off(0), n, n) += gamma_inv;
  g.segment(x_off(0), n) += gamma_inv * shared.x0;
  constant += 0.5 * quadratic_form(shared.x0, gamma_inv);

  // Output-mismatch term, trapezoidal in time: 1/2 sum_j w_j ||y_j - C x_j||^2_{Q^-1}.
  for (int j = 0; j <= steps; ++j) {
    double w = 0.0;
    if (j > 0) w += 0.5 * (grid.node(j) - grid.node(j - 1));
    if (j < steps) w += 0.5 * (grid.node(j + 1) - grid.node(j));
    const Vector& y_j = measurement[j];
    h.block(x_off(j), x_off(j), n, n) += w * cqc;
    g.segment(x_off(j), n) += w * shared.c.transpose() * (q_inv * y_j);
    constant += 0.5 * w * quadratic_form(y_j, q_inv);
  }

  // Control energy, exact for piecewise-constant v: 1/2 sum_j h_j ||v_j||^2_{R^-1}.
  for (int j = 0; j < steps; ++j) {
    const double hj = grid.node(j + 1) - grid.node(j);
    h.block(v_off(j), v_off(j), m, m) += hj * r_inv;
  }

  // Constraints: x_{j+1} - (I + h_j A) x_j - h_j B v_j = h_j f(t_j); x_steps = xi.
  Matrix con = Matrix::Zero(nc, nz);
  Vector con_rhs = Vector::Zero(nc);
  const Matrix identity = Matrix::Identity(n, n);
  for (int j = 0; j < steps; ++j) {
    const double hj = grid.node(j + 1) - grid.node(j);
    const long row = static_cast<long>(n) * j;
    con.block(row, x_off(j + 1), n, n) = identity;
    con.block(row, x_off(j), n, n) = -(identity + hj * sys.a);
    con.block(row, v_off(j), n, m) = -hj * shared.b;
    if (shared.forcing) con_rhs.segment(row, n) = hj * (*shared.forcing)(grid.node(j));
  }
  con.block(static_cast<long>(n) * steps, x_off(steps), n, n) = identity;
  con_rhs.segment(static_cast<long>(n) * steps, n) = xi;

  // KKT system [H A'; A 0] [z; lambda] = [g; b].
  Matrix kkt = Matrix::Zero(nz + nc, nz + nc);
  kkt.topLeftCorner(nz, nz) = h;
  kkt.topRightCorner(nz, nc) = con.transpose();
  kkt.bottomLeftCorner(nc, nz) = con;
  Vector rhs(nz + nc);
  rhs.head(nz) = g;
  rhs.tail(nc) = con_rhs;

  Eigen::PartialPivLU<Matrix> lu(kkt);
  const Vector sol = lu.solve(rhs);
  const double rel_residual = (kkt * sol - rhs).norm() / std::max(1.0, rhs.norm());
  if (!sol.allFinite() || rel_residual > 1e-8)
    throw NumericalError("brute_force_energy: singular optimality system");

  const Vector z = sol.head(nz);
  return 0.5 * z.dot(h * z) - g.dot(z) + constant;
}

ExpectedEnergyEvaluator::ExpectedEnergyEvaluator(const EnsembleResult& ensemble)
    : ensemble_(ensemble) {
  if (ensemble.size() == 0) throw ConfigError("ExpectedEnergyEvaluator: empty ensemble");
  const TimeGrid& grid = ensemble.grid;
  cumulative_integral_.resize(static_cast<size_t>(ensemble.size()));
  for (int k = 0; k < ensemble.size(); ++k) {
    const KalmanRun& run = ensemble.runs[static_cast<size_t>(k)];
    const Matrix q_inv = run.sys.q.inverse();
    auto& cum = cumulative_integral_[static_cast<size_t>(k)];
    cum.resize(static_cast<size_t>(grid.num_nodes()));
    cum[0] = 0.0;
    double prev = quadratic_form(run.residual[0], q_inv);
    for (int j = 1; j < grid.num_nodes(); ++j) {
      const double cur = quadratic_form(run.residual[j], q_inv);
      cum[static_cast<size_t>(j)] =
          cum[static_cast<size_t>(j) - 1] +
          0.5 * (grid.node(j) - grid.node(j - 1)) * (prev + cur);
      prev = cur;
    }
  }
}

double ExpectedEnergyEvaluator::value(int t_index, const Vector& xi) const {
  if (t_index < 0 || t_index >= ensemble_.grid.num_nodes())
    throw ConfigError("ExpectedEnergyEvaluator: t_index out of range");
  double acc = 0.0;
  for (int k = 0; k < ensemble_.size(); ++k) {
    const KalmanRun& run = ensemble_.runs[static_cast<size_t>(k)];
    const Vector d = xi - run.estimate[t_index];
    acc += 0.5 * quadratic_form(d, run.riccati.precision[t_index]) +
           0.5 * cumulative_integral_[static_cast<size_t>(k)][static_cast<size_t>(t_index)];
  }
  return acc / ensemble_.size();
}

Vector ExpectedEnergyEvaluator::gradient(int t_index, const Vector& xi) const {
  Vector acc = Vector::Zero(xi.size());
  for (const auto& run : ensemble_.runs) {
    acc += run.riccati.precision[t_index] * (xi - run.estimate[t_index]);
  }
  return acc / ensemble_.size();
}

double ExpectedEnergyEvaluator::expected_squared_mahalanobis(int t_index, const Vector& xi) const {
  double acc = 0.0;
  for (const auto& run : ensemble_.runs) {
    const Vector d = xi - run.estimate[t_index];
    acc += quadratic_form(d, run.riccati.precision[t_index]);
  }
  return acc / ensemble_.size();
}

double ExpectedEnergyEvaluator::precision_sum_norm(int t_index) const {
  Matrix acc = Matrix::Zero(ensemble_.runs.front().estimate.dim(),
                            ensemble_.runs.front().estimate.dim());
  for (const auto& run : ensemble_.runs) acc += run.riccati.precision[t_index];
  return spectral_norm(acc);
}

double expected_energy(const EnsembleResult& ensemble, int t_index, const Vector& xi,
                       const Trajectory& measurement) {
  if (measurement.grid() != ensemble.grid)
    throw ConfigError("expected_energy: measurement grid mismatch");
  return ExpectedEnergyEvaluator(ensemble).value(t_index, xi);
}

SystemDeviation system_deviation(const ParameterSpace& space, int sigma_bar_index, int p) {
  if (sigma_bar_index < 0 || sigma_bar_index >= space.size())
    throw ConfigError("system_deviation: reference member index out of range");
  if (p != 1 && p != 2) throw ConfigError("system_deviation: p must be 1 or 2");

  const SystemTuple& ref = space.members[static_cast<size_t>(sigma_bar_index)];
  SystemDeviation dev;
  dev.per_member.reserve(static_cast<size_t>(space.size()));
  double total = 0.0;
  for (const auto& member : space.members) {
    const double na = spectral_norm(member.a - ref.a);
    const double ng = spectral_norm(member.gamma.matrix() - ref.gamma.matrix());
    const double nr = spectral_norm(member.r.matrix() - ref.r.matrix());
    const double nq = spectral_norm(member.q.matrix() - ref.q.matrix());
    const double d = p == 1 ? na + ng + nr + nq
                            : std::sqrt(na * na + ng * ng + nr * nr + nq * nq);
    dev.per_member.push_back(d);
    total += d;
  }
  dev.expected = total / space.size();
  return dev;
}

DiagnosticSeries weighted_error_series(const Trajectory& estimate, const KalmanRun& reference) {
  if (estimate.grid() != reference.estimate.grid())
    throw ConfigError("weighted_error_series: estimate and reference must share the grid");
  DiagnosticSeries series{estimate.grid(), {}};
  series.values.reserve(static_cast<size_t>(estimate.grid().num_nodes()));
  for (int j = 0; j < estimate.grid().num_nodes(); ++j) {
    series.values.push_back(
        mahalanobis(estimate[j], reference.estimate[j], reference.riccati.precision[j]));
  }
  return series;
}

}  // namespace kbu
