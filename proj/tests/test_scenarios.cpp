#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kbu/scenarios.hpp"

using namespace kbu;

TEST_CASE("oscillator family has 101 evenly spaced damping values") {
  auto bundle = oscillator_scenario(3.0);
  CHECK(bundle.space.size() == 101);
  CHECK(bundle.space.factor_sizes == std::array<int, 4>{101, 1, 1, 1});
  CHECK(bundle.grid.num_intervals() == 1000);
  CHECK(bundle.grid.t_end() == 10.0);

  CHECK(std::abs(bundle.space.labels.front()[0] - 0.1) <= 1e-15);
  CHECK(std::abs(bundle.space.labels.back()[0] - 3.0) <= 1e-15);
  const double step = 2.9 / 100.0;
  for (int k = 0; k + 1 < 101; ++k) {
    const double gap = bundle.space.labels[static_cast<size_t>(k) + 1][0] -
                       bundle.space.labels[static_cast<size_t>(k)][0];
    CHECK(gap == doctest::Approx(step).epsilon(1e-12));
  }
  CHECK(bundle.space.labels[50][0] == doctest::Approx(1.55).epsilon(1e-15));
}

TEST_CASE("oscillator member matrices carry the damping in the lower-right entry") {
  auto b3 = oscillator_scenario(3.0);
  CHECK(b3.true_index == 100);
  const Matrix& a3 = b3.space.members[100].a;
  CHECK(a3(0, 0) == 0.0);
  CHECK(a3(0, 1) == 1.0);
  CHECK(a3(1, 0) == -1.0);
  CHECK(a3(1, 1) == doctest::Approx(-3.0).epsilon(1e-15));

  auto b01 = oscillator_scenario(0.1);
  CHECK(b01.true_index == 0);
  CHECK(b01.space.members[0].a(1, 1) == doctest::Approx(-0.1).epsilon(1e-15));

  CHECK(b3.gamma.matrix()(0, 0) == doctest::Approx(0.1));
  CHECK(b3.gamma.matrix()(0, 1) == 0.0);
  CHECK(b3.r_cov.matrix()(0, 0) == doctest::Approx(0.05));
  CHECK(b3.q_cov.matrix()(0, 0) == doctest::Approx(0.05));
  CHECK(b3.shared.x0[0] == 1.0);
  CHECK(b3.shared.x0[1] == 0.0);
  CHECK_FALSE(b3.shared.forcing.has_value());
}

TEST_CASE("every oscillator member is damped") {
  auto bundle = oscillator_scenario(1.55);
  for (const auto& member : bundle.space.members) {
    CHECK(member.a.trace() < 0.0);
  }
}

TEST_CASE("sigma_bar lookup requires an exact family member") {
  CHECK_THROWS_AS(oscillator_scenario(0.5), ConfigError);  // between grid points
  CHECK_NOTHROW(oscillator_scenario(0.1 + 29.0 * 2.9 / 100.0));
}

TEST_CASE("spread scaling contracts the family around its midpoint") {
  auto half = oscillator_scenario(1.55, 100, 0.5);
  CHECK(half.space.size() == 101);
  CHECK(half.space.labels.front()[0] == doctest::Approx(1.55 - 0.5 * 1.45).epsilon(1e-14));
  CHECK(half.space.labels.back()[0] == doctest::Approx(1.55 + 0.5 * 1.45).epsilon(1e-14));
  CHECK(half.space.labels[50][0] == doctest::Approx(1.55).epsilon(1e-14));
  CHECK(half.true_index == 50);
  CHECK_THROWS_AS(oscillator_scenario(3.0, 100, 0.5), ConfigError);
  CHECK_THROWS_AS(oscillator_scenario(1.55, 100, 0.0), ConfigError);
}

TEST_CASE("amplidyne family enumerates the 125 inductance combinations") {
  Vector sb(3);
  sb << 10.0, 0.5, 10.0;
  auto bundle = amplidyne_scenario(sb);
  CHECK(bundle.space.size() == 125);
  CHECK(bundle.true_index == 0);
  CHECK(bundle.grid.num_intervals() == 1000);

  // Printed sparsity: lower bidiagonal, negative diagonal.
  for (const auto& member : bundle.space.members) {
    const Matrix& a = member.a;
    CHECK(a.trace() < 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i == j) {
          CHECK(a(i, j) < 0.0);
        } else if (j == i - 1) {
          CHECK(a(i, j) > 0.0);
        } else {
          CHECK(a(i, j) == 0.0);
        }
      }
  }
}

TEST_CASE("amplidyne true member realizes the printed coefficients") {
  Vector sb(3);
  sb << 10.0, 0.5, 10.0;
  auto bundle = amplidyne_scenario(sb);
  const Matrix& a = bundle.space.members[0].a;
  CHECK(a(0, 0) == doctest::Approx(-10.0));  // -rho1 / L1
  CHECK(a(1, 0) == doctest::Approx(2.0));    // k1 / L2
  CHECK(a(1, 1) == doctest::Approx(-1.0));   // -rho2 / L2

  // The first diagonal entry is sigma-independent.
  for (const auto& member : bundle.space.members) {
    CHECK(member.a(0, 0) == doctest::Approx(-10.0));
  }

  CHECK(bundle.q_cov.matrix()(0, 0) == doctest::Approx(1600.0));
  CHECK(bundle.r_cov.matrix()(0, 0) == doctest::Approx(0.01));
  const Vector gamma_diag = bundle.gamma.matrix().diagonal();
  CHECK(gamma_diag[0] == doctest::Approx(0.125));
  CHECK(gamma_diag[1] == doctest::Approx(0.25));
  CHECK(gamma_diag[2] == doctest::Approx(2.5));
  CHECK(gamma_diag[3] == doctest::Approx(5.0));

  CHECK(bundle.shared.c(0, 3) == doctest::Approx(50.0));
  CHECK(bundle.shared.b(0, 0) == doctest::Approx(2.0));
  REQUIRE(bundle.shared.forcing.has_value());
  const Vector f = (*bundle.shared.forcing)(0.3);
  CHECK(f[0] == doctest::Approx(2.0));
  CHECK(f[1] == 0.0);

  SUBCASE("probe members step diagonally through the factor grids") {
    REQUIRE(bundle.probe_members.size() == 5);
    const Vector& probe2 = bundle.space.labels[static_cast<size_t>(bundle.probe_members[1])];
    CHECK(probe2[0] == doctest::Approx(12.5));
    CHECK(probe2[1] == doctest::Approx(0.75));
    CHECK(probe2[2] == doctest::Approx(17.5));
    const Vector& probe5 = bundle.space.labels[static_cast<size_t>(bundle.probe_members[4])];
    CHECK(probe5[0] == doctest::Approx(20.0));
    CHECK(probe5[1] == doctest::Approx(1.5));
    CHECK(probe5[2] == doctest::Approx(40.0));
  }
}

TEST_CASE("amplidyne rejects parameters outside the family") {
  Vector bad(3);
  bad << 11.0, 0.5, 10.0;
  CHECK_THROWS_AS(amplidyne_scenario(bad), ConfigError);
  Vector wrong_size(2);
  wrong_size << 10.0, 0.5;
  CHECK_THROWS_AS(amplidyne_scenario(wrong_size), ConfigError);
}

TEST_CASE("scenario registry lists both builders") {
  auto names = scenario_names();
  CHECK(names == std::vector<std::string>{"oscillator", "amplidyne"});
}
