#include "kbu/odeint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kbu {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b* (5th minus embedded 4th order weights), for the error estimate.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

void check_finite(const Vector& v, double t, const char* what) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "integrate: " << what << " produced a non-finite value at t = " << t;
    throw NumericalError(os.str());
  }
}

double scaled_error_norm(const Vector& err, const Vector& y_old, const Vector& y_new,
                         double abs_tol, double rel_tol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = abs_tol + rel_tol * std::max(std::abs(y_old[i]), std::abs(y_new[i]));
    const double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double scaled_norm(const Vector& v, const Vector& ref, double abs_tol, double rel_tol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double sc = abs_tol + rel_tol * std::abs(ref[i]);
    const double q = v[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Hairer-style automatic selection of the first trial step.
double initial_step_guess(const OdeRhs& rhs, double t0, const Vector& y0, const Vector& f0,
                          double span, double abs_tol, double rel_tol) {
  const double d0 = scaled_norm(y0, y0, abs_tol, rel_tol);
  const double d1 = scaled_norm(f0, y0, abs_tol, rel_tol);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * (d0 / d1);
  h0 = std::min(h0, span);

  Vector y1 = y0 + h0 * f0;
  Vector f1(y0.size());
  rhs(t0 + h0, y1, f1);
  check_finite(f1, t0 + h0, "rhs");
  const double d2 = scaled_norm(f1 - f0, y0, abs_tol, rel_tol) / h0;

  double h1;
  if (std::max(d1, d2) <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
  }
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

Trajectory integrate(const OdeRhs& rhs, const Vector& y0, const TimeGrid& grid,
                     const IntegratorConfig& config) {
  if (config.rel_tol < 1e-14 || config.abs_tol < 1e-16)
    throw ConfigError("integrate: tolerances below the supported range");
  if (config.max_steps < 1) throw ConfigError("integrate: max_steps must be positive");
  if (config.initial_step && !(*config.initial_step > 0.0))
    throw ConfigError("integrate: initial_step must be positive");

  const Eigen::Index d = y0.size();
  const double span = grid.t_end() - grid.t_start();

  std::vector<Vector> out;
  out.reserve(static_cast<size_t>(grid.num_nodes()));
  out.push_back(y0);

  Vector y = y0;
  double t = grid.t_start();

  Vector k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d);
  Vector y_stage(d), y_new(d), err(d);

  rhs(t, y, k1);
  check_finite(k1, t, "rhs");

  double h = config.initial_step
                 ? std::min(*config.initial_step, span)
                 : initial_step_guess(rhs, t, y, k1, span, config.abs_tol, config.rel_tol);

  long steps = 0;
  const double hmin_factor = 16.0 * std::numeric_limits<double>::epsilon();

  for (int node = 1; node <= grid.num_intervals(); ++node) {
    const double t_target = grid.node(node);
    while (t < t_target) {
      if (++steps > config.max_steps) {
        std::ostringstream os;
        os << "integrate: step budget (" << config.max_steps << ") exhausted at t = " << t;
        throw NonconvergenceError(os.str());
      }
      // Stretching by up to 1% avoids leaving an unresolvable sliver before
      // the node; the error test still vets the stretched step.
      const bool clipped = 1.01 * h >= t_target - t;
      const double h_step = clipped ? t_target - t : h;
      if (h_step < hmin_factor * std::max(std::abs(t), 1.0)) {
        std::ostringstream os;
        os << "integrate: step size underflow at t = " << t;
        throw NumericalError(os.str());
      }

      y_stage = y + h_step * (a21 * k1);
      rhs(t + c2 * h_step, y_stage, k2);
      y_stage = y + h_step * (a31 * k1 + a32 * k2);
      rhs(t + c3 * h_step, y_stage, k3);
      y_stage = y + h_step * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * h_step, y_stage, k4);
      y_stage = y + h_step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * h_step, y_stage, k5);
      y_stage = y + h_step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + h_step, y_stage, k6);
      y_new = y + h_step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      rhs(t + h_step, y_new, k7);  // FSAL stage
      check_finite(k7, t + h_step, "rhs");

      err = h_step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double err_norm =
          scaled_error_norm(err, y, y_new, config.abs_tol, config.rel_tol);

      if (err_norm <= 1.0) {
        t = clipped ? t_target : t + h_step;
        y.swap(y_new);
        k1.swap(k7);
        const double factor =
            std::clamp(0.9 * std::pow(std::max(err_norm, 1e-16), -0.2), 0.2, 5.0);
        const double h_prop = h_step * factor;
        // A clipped remainder must not shrink the controller's proposal.
        h = clipped ? std::max(h, h_prop) : h_prop;
      } else {
        h = h_step * std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 1.0);
      }
    }
    out.push_back(y);
  }

  return Trajectory(grid, std::move(out));
}

}  // namespace kbu
