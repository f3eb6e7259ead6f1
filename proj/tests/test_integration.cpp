#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kbu/diagnostics.hpp"
#include "kbu/estimators.hpp"
#include "kbu/scenarios.hpp"
#include "kbu/synth.hpp"

using namespace kbu;

namespace {

struct OscillatorFixture {
  ScenarioBundle bundle = oscillator_scenario(3.0);
  std::vector<RiccatiSolution> family =
      riccati_family(bundle.space, bundle.shared, bundle.grid, {}, 0);

  EnsembleResult ensemble_for_seed(std::uint64_t seed) const {
    auto samples = sample_disturbances(bundle.shared, bundle.gamma, bundle.r_cov, bundle.q_cov,
                                       bundle.grid, seed);
    auto realization = generate_measurement(
        bundle.space.members[static_cast<size_t>(bundle.true_index)], bundle.shared, samples,
        bundle.grid, {});
    return run_ensemble(bundle.space, bundle.shared, realization.measurement, bundle.grid, {},
                        family, 0);
  }

  Trajectory measurement_for_seed(std::uint64_t seed) const {
    auto samples = sample_disturbances(bundle.shared, bundle.gamma, bundle.r_cov, bundle.q_cov,
                                       bundle.grid, seed);
    return generate_measurement(
               bundle.space.members[static_cast<size_t>(bundle.true_index)], bundle.shared,
               samples, bundle.grid, {})
        .measurement;
  }
};

OscillatorFixture& oscillator_fixture() {
  static OscillatorFixture fixture;
  return fixture;
}

}  // namespace

TEST_CASE("covariance-precision duality holds across the oscillator family") {
  auto& fix = oscillator_fixture();
  const Matrix identity = Matrix::Identity(2, 2);
  double worst = 0.0;
  for (const auto& solution : fix.family) {
    CHECK_FALSE(solution.precision_from_inverse);
    for (int j = 0; j < fix.bundle.grid.num_nodes(); ++j) {
      worst = std::max(worst, (solution.covariance[j] * solution.precision[j] - identity)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("the averaged oscillator tuple has the mean damping") {
  auto& fix = oscillator_fixture();
  const SystemTuple averaged = mean_system(fix.bundle.space);
  CHECK(averaged.a(1, 1) == doctest::Approx(-1.55).epsilon(1e-12));
}

TEST_CASE("averaging the gain is not the same as averaging the system") {
  auto& fix = oscillator_fixture();
  auto measurement = fix.measurement_for_seed(1);
  auto ensemble = run_ensemble(fix.bundle.space, fix.bundle.shared, measurement,
                               fix.bundle.grid, {}, fix.family, 0);

  auto em = expected_matrices_estimator(fix.bundle.space, fix.bundle.shared, measurement,
                                        fix.bundle.grid, {});
  auto eg = expected_gain_estimator(fix.bundle.space, ensemble, fix.bundle.shared, measurement,
                                    fix.bundle.grid, {});
  double sup = 0.0;
  for (int j = 0; j < fix.bundle.grid.num_nodes(); ++j) {
    sup = std::max(sup, (em.estimate[j] - eg.estimate[j]).cwiseAbs().maxCoeff());
  }
  CHECK(sup > 1e-6);
}

TEST_CASE("nodewise estimator identities on a full-scale realization") {
  auto& fix = oscillator_fixture();
  auto ensemble = fix.ensemble_for_seed(1);
  auto ef = expected_filter_estimator(ensemble);
  auto en = energy_min_estimator(ensemble);
  ExpectedEnergyEvaluator energy(ensemble);

  for (int j = 0; j < fix.bundle.grid.num_nodes(); ++j) {
    // The plain mean stays inside the member hull.
    for (int i = 0; i < 2; ++i) {
      double lo = ensemble.runs[0].estimate[j][i], hi = lo;
      for (const auto& run : ensemble.runs) {
        lo = std::min(lo, run.estimate[j][i]);
        hi = std::max(hi, run.estimate[j][i]);
      }
      CHECK(ef.estimate[j][i] >= lo - 1e-10);
      CHECK(ef.estimate[j][i] <= hi + 1e-10);
    }
  }

  for (int j = 0; j < fix.bundle.grid.num_nodes(); j += 25) {
    const double scale = energy.precision_sum_norm(j) / fix.bundle.space.size();
    CHECK(energy.gradient(j, en.estimate[j]).norm() <= 1e-6 * scale);
  }
}

TEST_CASE("the energy minimizer mostly dominates in the second half window") {
  auto& fix = oscillator_fixture();
  const int half = fix.bundle.grid.num_nodes() / 2;
  int dominated = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto ensemble = fix.ensemble_for_seed(seed);
    const auto& reference = ensemble.runs[static_cast<size_t>(fix.bundle.true_index)];
    auto measurement_dummy = fix.measurement_for_seed(seed);

    auto em = expected_matrices_estimator(fix.bundle.space, fix.bundle.shared,
                                          measurement_dummy, fix.bundle.grid, {});
    auto ef = expected_filter_estimator(ensemble);
    auto en = energy_min_estimator(ensemble);

    auto err_em = weighted_error_series(em.estimate, reference);
    auto err_ef = weighted_error_series(ef.estimate, reference);
    auto err_en = weighted_error_series(en.estimate, reference);
    for (int j = half; j < fix.bundle.grid.num_nodes(); ++j) {
      ++total;
      const double cap = std::max(err_em.values[static_cast<size_t>(j)],
                                  err_ef.values[static_cast<size_t>(j)]);
      if (err_en.values[static_cast<size_t>(j)] <= cap) ++dominated;
    }
  }
  CHECK(dominated >= static_cast<int>(0.9 * total));
}

TEST_CASE("a medium-grid amplidyne run reproduces the structural observations") {
  Vector sb(3);
  sb << 10.0, 0.5, 10.0;
  auto bundle = amplidyne_scenario(sb, 400);
  auto samples =
      sample_disturbances(bundle.shared, bundle.gamma, bundle.r_cov, bundle.q_cov, bundle.grid, 2);
  auto realization = generate_measurement(
      bundle.space.members[static_cast<size_t>(bundle.true_index)], bundle.shared, samples,
      bundle.grid, {});
  auto ensemble =
      run_ensemble(bundle.space, bundle.shared, realization.measurement, bundle.grid, {}, 0);
  REQUIRE(ensemble.size() == 125);

  auto ef = expected_filter_estimator(ensemble);
  auto en = energy_min_estimator(ensemble);
  ExpectedEnergyEvaluator energy(ensemble);

  CHECK(ef.estimate[0] == bundle.shared.x0);
  CHECK(en.estimate[0].isApprox(bundle.shared.x0, 1e-9));

  for (int j = 0; j < bundle.grid.num_nodes(); ++j) {
    for (int i = 0; i < 4; ++i) {
      double lo = ensemble.runs[0].estimate[j][i], hi = lo;
      for (const auto& run : ensemble.runs) {
        lo = std::min(lo, run.estimate[j][i]);
        hi = std::max(hi, run.estimate[j][i]);
      }
      const double slack = 1e-9 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
      CHECK(ef.estimate[j][i] >= lo - slack);
      CHECK(ef.estimate[j][i] <= hi + slack);
    }
  }

  for (int j = 0; j < bundle.grid.num_nodes(); j += 40) {
    const double at_en = energy.expected_squared_mahalanobis(j, en.estimate[j]);
    CHECK(at_en <= energy.expected_squared_mahalanobis(j, ef.estimate[j]) + 1e-10);
  }

  // The amplified output of the true member settles near 400x the unit input.
  const Vector tail = ensemble.runs[0].estimate[bundle.grid.num_nodes() - 1];
  CHECK((bundle.shared.c * tail)(0) == doctest::Approx(400.0).epsilon(0.2));
}
