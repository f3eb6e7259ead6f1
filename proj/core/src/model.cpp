#include "kbu/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kbu {

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

void check_symmetry(const Matrix& m, double rel_tol, const char* what) {
  const double scale = std::max(1.0, max_abs(m));
  const double asym = max_abs(m - m.transpose());
  if (asym > rel_tol * scale) {
    std::ostringstream os;
    os << what << ": matrix is not symmetric (relative asymmetry " << asym / scale
       << " exceeds " << rel_tol << ")";
    throw ConfigError(os.str());
  }
}

}  // namespace

SpdMatrix::SpdMatrix(Matrix m, double sym_tol) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw ConfigError("SpdMatrix: matrix must be square and non-empty");
  }
  check_symmetry(m_, sym_tol, "SpdMatrix");
  m_ = ((m_ + m_.transpose()) / 2.0).eval();
  llt_.compute(m_);
  if (llt_.info() != Eigen::Success) {
    throw ConfigError("SpdMatrix: Cholesky factorization failed, matrix is not positive definite");
  }
}

SpdMatrix SpdMatrix::scaled_identity(Eigen::Index dim, double s) {
  return SpdMatrix(s * Matrix::Identity(dim, dim));
}

Matrix SpdMatrix::inverse() const {
  return llt_.solve(Matrix::Identity(dim(), dim()));
}

double SpdMatrix::determinant() const {
  const auto& l = llt_.matrixLLT();
  double det = 1.0;
  for (Eigen::Index i = 0; i < dim(); ++i) det *= l(i, i) * l(i, i);
  return det;
}

void validate_dimensions(const SystemTuple& sys, const SharedModel& shared) {
  const Eigen::Index n = shared.x0.size();
  const Eigen::Index m = shared.b.cols();
  const Eigen::Index r = shared.c.rows();
  if (sys.a.rows() != n || sys.a.cols() != n)
    throw ConfigError("system matrix A must be n x n with n = dim(x0)");
  if (shared.b.rows() != n) throw ConfigError("noise input matrix B must have n rows");
  if (shared.c.cols() != n) throw ConfigError("output matrix C must have n columns");
  if (sys.gamma.dim() != n) throw ConfigError("Gamma must be n x n");
  if (sys.r.dim() != m) throw ConfigError("R must match the number of noise channels");
  if (sys.q.dim() != r) throw ConfigError("Q must match the number of outputs");
  if (!(shared.horizon > 0.0)) throw ConfigError("horizon must be positive");
}

TimeGrid::TimeGrid(double t_start, double t_end, int num_intervals)
    : t_start_(t_start), t_end_(t_end), num_intervals_(num_intervals) {
  if (num_intervals < 1) throw ConfigError("TimeGrid: num_intervals must be positive");
  if (!(t_end > t_start)) throw ConfigError("TimeGrid: t_end must exceed t_start");
}

Trajectory::Trajectory(TimeGrid grid, std::vector<Vector> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != static_cast<size_t>(grid_.num_nodes())) {
    throw ConfigError("Trajectory: values.size() must equal num_intervals + 1");
  }
  const Eigen::Index d = values_.front().size();
  for (const auto& v : values_) {
    if (v.size() != d) throw ConfigError("Trajectory: inconsistent value dimensions");
  }
}

MatrixTrajectory::MatrixTrajectory(TimeGrid grid, std::vector<Matrix> values, bool spd)
    : grid_(grid), values_(std::move(values)), spd_(spd) {
  if (values_.size() != static_cast<size_t>(grid_.num_nodes())) {
    throw ConfigError("MatrixTrajectory: values.size() must equal num_intervals + 1");
  }
  const Eigen::Index d = values_.front().rows();
  for (const auto& m : values_) {
    if (m.rows() != d || m.cols() != d)
      throw ConfigError("MatrixTrajectory: values must be square with a common dimension");
  }
  if (spd_) {
    for (const auto& m : values_) check_symmetry(m, 1e-9, "MatrixTrajectory[spd]");
  }
}

namespace detail {

GridPos locate(const TimeGrid& grid, double t) {
  if (t < grid.t_start() || t > grid.t_end()) {
    std::ostringstream os;
    os << "evaluate: t = " << t << " outside [" << grid.t_start() << ", " << grid.t_end() << "]";
    throw std::domain_error(os.str());
  }
  const int m = grid.num_intervals();
  const double span = grid.t_end() - grid.t_start();
  int j = static_cast<int>(std::floor((t - grid.t_start()) * m / span));
  j = std::clamp(j, 0, m - 1);
  // FP guard: the floor estimate can be off by one around node boundaries.
  if (t < grid.node(j) && j > 0) --j;
  if (t > grid.node(j + 1) && j < m - 1) ++j;
  if (t == grid.node(j)) return {j, 0.0};
  if (t == grid.node(j + 1)) return {j, 1.0};
  const double tj = grid.node(j);
  const double tj1 = grid.node(j + 1);
  return {j, (t - tj) / (tj1 - tj)};
}

}  // namespace detail

Vector evaluate(const Trajectory& traj, double t) {
  const auto pos = detail::locate(traj.grid(), t);
  if (pos.weight == 0.0) return traj[pos.index];
  if (pos.weight == 1.0) return traj[pos.index + 1];
  return (1.0 - pos.weight) * traj[pos.index] + pos.weight * traj[pos.index + 1];
}

Matrix evaluate(const MatrixTrajectory& traj, double t) {
  const auto pos = detail::locate(traj.grid(), t);
  if (pos.weight == 0.0) return traj[pos.index];
  if (pos.weight == 1.0) return traj[pos.index + 1];
  return (1.0 - pos.weight) * traj[pos.index] + pos.weight * traj[pos.index + 1];
}

}  // namespace kbu
