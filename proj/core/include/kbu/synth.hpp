#pragma once

#include <cstdint>

#include "kbu/model.hpp"
#include "kbu/odeint.hpp"

namespace kbu {

/// Seeded Gaussian draws for one experiment: the initial-state error eta,
/// and nodewise i.i.d. samples of the dynamics noise v and output noise mu,
/// read between nodes by linear interpolation.
///
/// Reproducibility contract: each disturbance kind draws from its own
/// substream of a std::mt19937_64 generator, seeded by splitmix64 applied to
/// the user seed xor a fixed per-kind tag. Normal variates come from the
/// Box-Muller transform on uniform doubles in (0, 1]. Adding further kinds
/// never perturbs existing streams.
struct DisturbanceSamples {
  std::uint64_t seed = 0;
  Vector eta;     // n
  Trajectory v;   // m per node
  Trajectory mu;  // r per node
};

DisturbanceSamples sample_disturbances(const SharedModel& shared, const SpdMatrix& gamma,
                                       const SpdMatrix& r_cov, const SpdMatrix& q_cov,
                                       const TimeGrid& grid, std::uint64_t seed);

/// Disturbance samples plus the trajectories they induce: the disturbed
/// truth x and the measurement y = C x + mu.
struct DisturbanceRealization {
  std::uint64_t seed;
  Vector eta;
  Trajectory v;
  Trajectory mu;
  Trajectory truth;
  Trajectory measurement;
};

/// Integrates dx/dt = A x + f(t) + B v(t) from x0 + eta (v interpolated
/// between nodes) and forms y = C x + mu nodewise.
DisturbanceRealization generate_measurement(const SystemTuple& sys_true,
                                            const SharedModel& shared,
                                            const DisturbanceSamples& disturbances,
                                            const TimeGrid& grid,
                                            const IntegratorConfig& config);

namespace detail {
/// SplitMix64 step; used to derive per-kind substream seeds.
std::uint64_t splitmix64(std::uint64_t x);
/// K independent standard-normal vectors of dimension d from the named
/// substream of `seed`.
std::vector<Vector> standard_normal_block(std::uint64_t seed, std::uint64_t stream_tag,
                                          Eigen::Index d, int count);
}  // namespace detail

}  // namespace kbu
