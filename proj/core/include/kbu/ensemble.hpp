#pragma once

#include <array>
#include <vector>

#include "kbu/filter.hpp"
#include "kbu/model.hpp"

namespace kbu {

/// Finite product parameter family Sigma = Sigma_A x Sigma_Gamma x Sigma_R x
/// Sigma_Q with uniform weight 1/N per member. Members are enumerated
/// lexicographically with the A index slowest and the Q index fastest; that
/// ordering is part of the output contract.
struct ParameterSpace {
  std::vector<SystemTuple> members;
  std::vector<Vector> labels;        // parameter vector per member
  std::array<int, 4> factor_sizes;   // N_A, N_Gamma, N_R, N_Q

  int size() const { return static_cast<int>(members.size()); }
};

/// Cartesian product of the four factor lists. Labels default to the factor
/// index 4-vectors; scenario builders overwrite them with physical values.
/// Throws ConfigError when a factor list is empty.
ParameterSpace build_parameter_space(std::vector<Matrix> a_list,
                                     std::vector<SpdMatrix> gamma_list,
                                     std::vector<SpdMatrix> r_list,
                                     std::vector<SpdMatrix> q_list);

/// Decomposes member index k into (i_A, i_Gamma, i_R, i_Q).
std::array<int, 4> factor_indices(const ParameterSpace& space, int k);
/// Inverse of factor_indices.
int member_index(const ParameterSpace& space, const std::array<int, 4>& idx);

/// The family of Kalman runs, ordered by member index.
struct EnsembleResult {
  std::vector<KalmanRun> runs;
  TimeGrid grid;

  int size() const { return static_cast<int>(runs.size()); }
};

/// Solves both Riccati equations for every member. Measurement-independent,
/// so one family can serve many measurement realizations. `jobs` = 0 uses
/// the hardware concurrency; 1 disables threading. Results are merged by
/// member index regardless of execution order.
std::vector<RiccatiSolution> riccati_family(const ParameterSpace& space,
                                            const SharedModel& shared, const TimeGrid& grid,
                                            const IntegratorConfig& config, int jobs = 0);

/// Runs the filter of every member against the same measurement, reusing a
/// precomputed Riccati family.
EnsembleResult run_ensemble(const ParameterSpace& space, const SharedModel& shared,
                            const Trajectory& measurement, const TimeGrid& grid,
                            const IntegratorConfig& config,
                            const std::vector<RiccatiSolution>& riccatis, int jobs = 0);

/// Convenience overload computing the Riccati family internally.
EnsembleResult run_ensemble(const ParameterSpace& space, const SharedModel& shared,
                            const Trajectory& measurement, const TimeGrid& grid,
                            const IntegratorConfig& config, int jobs = 0);

}  // namespace kbu
