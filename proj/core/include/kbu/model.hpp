#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

#include "kbu/errors.hpp"

namespace kbu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric positive definite matrix. Construction validates symmetry
/// and positive definiteness (via Cholesky) and caches the factorization.
class SpdMatrix {
 public:
  /// Throws ConfigError if `m` is not square, not symmetric to `sym_tol`
  /// relative max-norm, or its Cholesky factorization fails.
  explicit SpdMatrix(Matrix m, double sym_tol = 1e-12);

  /// Convenience: s * Identity(dim), s > 0.
  static SpdMatrix scaled_identity(Eigen::Index dim, double s);

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }

  Matrix inverse() const;
  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
  /// Determinant computed as the product of squared Cholesky diagonal entries.
  double determinant() const;

 private:
  Matrix m_;
  Eigen::LLT<Matrix> llt_;
};

/// One parameter realization (A_k, Gamma_k, R_k, Q_k) of the uncertain system.
struct SystemTuple {
  Matrix a;         // n x n drift
  SpdMatrix gamma;  // n x n initial-error covariance
  SpdMatrix r;      // m x m dynamics-noise covariance
  SpdMatrix q;      // r x r output-noise covariance
};

using ForcingFn = std::function<Vector(double)>;

/// Parameter-independent parts of the model: noise input map, output map,
/// modeled initial state, optional known forcing, and the horizon.
struct SharedModel {
  Matrix b;  // n x m
  Matrix c;  // r x n
  Vector x0;
  std::optional<ForcingFn> forcing;  // f(t), defined on [0, horizon]
  double horizon = 0.0;
};

/// Throws ConfigError when the tuple's dimensions do not match the shared
/// model (state/noise/output sizes).
void validate_dimensions(const SystemTuple& sys, const SharedModel& shared);

/// Uniform grid t_j = t_start + j*(t_end-t_start)/M, j = 0..M.
class TimeGrid {
 public:
  TimeGrid(double t_start, double t_end, int num_intervals);

  double node(int j) const {
    if (j == num_intervals_) return t_end_;  // endpoint exact regardless of rounding
    return t_start_ + (static_cast<double>(j) * (t_end_ - t_start_)) / num_intervals_;
  }
  int num_intervals() const { return num_intervals_; }
  int num_nodes() const { return num_intervals_ + 1; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double spacing() const { return (t_end_ - t_start_) / num_intervals_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  double t_start_;
  double t_end_;
  int num_intervals_;
};

/// Vector-valued function sampled on a TimeGrid, one value per node.
class Trajectory {
 public:
  Trajectory(TimeGrid grid, std::vector<Vector> values);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Vector>& values() const { return values_; }
  const Vector& operator[](int j) const { return values_[static_cast<size_t>(j)]; }
  Eigen::Index dim() const { return values_.front().size(); }

 private:
  TimeGrid grid_;
  std::vector<Vector> values_;
};

/// Square-matrix-valued function sampled on a TimeGrid. When `spd` is set,
/// construction checks every node for symmetry (1e-9 relative max-norm).
class MatrixTrajectory {
 public:
  MatrixTrajectory(TimeGrid grid, std::vector<Matrix> values, bool spd = false);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Matrix>& values() const { return values_; }
  const Matrix& operator[](int j) const { return values_[static_cast<size_t>(j)]; }
  Eigen::Index dim() const { return values_.front().rows(); }
  bool spd_flagged() const { return spd_; }

 private:
  TimeGrid grid_;
  std::vector<Matrix> values_;
  bool spd_;
};

/// Linear interpolation between grid nodes; exact (bitwise) at the nodes.
/// Throws std::domain_error for t outside [t_start, t_end].
Vector evaluate(const Trajectory& traj, double t);
Matrix evaluate(const MatrixTrajectory& traj, double t);

namespace detail {
/// Locates j with node(j) <= t <= node(j+1) and the interpolation weight;
/// weight is exactly 0 or 1 when t hits a node bitwise.
struct GridPos {
  int index;
  double weight;
};
GridPos locate(const TimeGrid& grid, double t);
}  // namespace detail

}  // namespace kbu
