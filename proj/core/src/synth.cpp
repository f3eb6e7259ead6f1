#include "kbu/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace kbu {

namespace detail {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

// Uniform double in (0, 1]: 53 mantissa bits, never exactly zero (log-safe).
double uniform_open_closed(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::vector<Vector> standard_normal_block(std::uint64_t seed, std::uint64_t stream_tag,
                                          Eigen::Index d, int count) {
  std::mt19937_64 gen(splitmix64(seed ^ stream_tag));
  std::vector<Vector> block;
  block.reserve(static_cast<size_t>(count));

  bool have_spare = false;
  double spare = 0.0;
  const auto next_normal = [&]() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u1 = uniform_open_closed(gen);
    const double u2 = uniform_open_closed(gen);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare = radius * std::sin(angle);
    have_spare = true;
    return radius * std::cos(angle);
  };

  for (int k = 0; k < count; ++k) {
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = next_normal();
    block.push_back(std::move(z));
  }
  return block;
}

}  // namespace detail

namespace {

// Fixed substream tags; appending new kinds leaves these untouched.
constexpr std::uint64_t kEtaStream = 0x657461'00ULL;       // "eta"
constexpr std::uint64_t kDynamicsStream = 0x764e'6f697365ULL;  // "vNoise"
constexpr std::uint64_t kOutputStream = 0x6d75'4e6f697365ULL;  // "muNoise"

std::vector<Vector> correlate(const SpdMatrix& cov, std::vector<Vector> z) {
  const Matrix l = cov.llt().matrixL();
  for (auto& v : z) v = l * v;
  return z;
}

}  // namespace

DisturbanceSamples sample_disturbances(const SharedModel& shared, const SpdMatrix& gamma,
                                       const SpdMatrix& r_cov, const SpdMatrix& q_cov,
                                       const TimeGrid& grid, std::uint64_t seed) {
  const Eigen::Index n = shared.x0.size();
  if (gamma.dim() != n)
    throw ConfigError("sample_disturbances: Gamma dimension must match the state");
  const Eigen::Index m = shared.b.cols();
  const Eigen::Index r = shared.c.rows();
  if (r_cov.dim() != m) throw ConfigError("sample_disturbances: R dimension mismatch");
  if (q_cov.dim() != r) throw ConfigError("sample_disturbances: Q dimension mismatch");

  auto eta_block = correlate(gamma, detail::standard_normal_block(seed, kEtaStream, n, 1));
  auto v_nodes = correlate(
      r_cov, detail::standard_normal_block(seed, kDynamicsStream, m, grid.num_nodes()));
  auto mu_nodes = correlate(
      q_cov, detail::standard_normal_block(seed, kOutputStream, r, grid.num_nodes()));

  return DisturbanceSamples{seed, std::move(eta_block.front()),
                            Trajectory(grid, std::move(v_nodes)),
                            Trajectory(grid, std::move(mu_nodes))};
}

DisturbanceRealization generate_measurement(const SystemTuple& sys_true,
                                            const SharedModel& shared,
                                            const DisturbanceSamples& disturbances,
                                            const TimeGrid& grid,
                                            const IntegratorConfig& config) {
  validate_dimensions(sys_true, shared);
  if (disturbances.v.grid() != grid || disturbances.mu.grid() != grid)
    throw ConfigError("generate_measurement: disturbances must be sampled on the same grid");

  const Matrix& a = sys_true.a;
  const Matrix& b = shared.b;
  const bool forced = shared.forcing.has_value();
  const Trajectory& v = disturbances.v;

  OdeRhs rhs = [&](double t, const Vector& x, Vector& dxdt) {
    dxdt = a * x + b * evaluate(v, t);
    if (forced) dxdt += (*shared.forcing)(t);
  };

  Trajectory truth = integrate(rhs, shared.x0 + disturbances.eta, grid, config);

  std::vector<Vector> y;
  y.reserve(static_cast<size_t>(grid.num_nodes()));
  for (int j = 0; j < grid.num_nodes(); ++j) {
    y.push_back(shared.c * truth[j] + disturbances.mu[j]);
  }

  return DisturbanceRealization{disturbances.seed,
                                disturbances.eta,
                                disturbances.v,
                                disturbances.mu,
                                std::move(truth),
                                Trajectory(grid, std::move(y))};
}

}  // namespace kbu
