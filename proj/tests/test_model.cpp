#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kbu/model.hpp"

using namespace kbu;

TEST_CASE("SpdMatrix accepts symmetric positive definite input") {
  Matrix m(2, 2);
  m << 2.0, 0.5, 0.5, 1.0;
  SpdMatrix spd(m);
  CHECK(spd.dim() == 2);
  CHECK(spd.matrix()(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("SpdMatrix rejects asymmetric input") {
  Matrix m(2, 2);
  m << 1.0, 0.1, 0.0, 1.0;
  CHECK_THROWS_AS(SpdMatrix{m}, ConfigError);
}

TEST_CASE("SpdMatrix rejects indefinite input via Cholesky failure") {
  Matrix m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  CHECK_THROWS_AS(SpdMatrix{m}, ConfigError);
  CHECK_THROWS_AS(SpdMatrix::scaled_identity(3, -1.0), ConfigError);
}

TEST_CASE("SpdMatrix determinant and inverse come from the Cholesky factor") {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << 2.0, 3.0;
  SpdMatrix spd(m);
  CHECK(spd.determinant() == doctest::Approx(6.0));
  CHECK((spd.inverse() * m - Matrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("TimeGrid nodes are equidistant and hit the endpoints exactly") {
  TimeGrid grid(0.0, 10.0, 1000);
  CHECK(grid.node(0) == 0.0);
  CHECK(grid.node(1000) == 10.0);  // bitwise
  for (int j = 0; j < 1000; ++j) {
    CHECK(grid.node(j + 1) - grid.node(j) == doctest::Approx(0.01).epsilon(1e-12));
  }
  CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 10), ConfigError);
}

TEST_CASE("Trajectory validates the node count") {
  TimeGrid grid(0.0, 1.0, 2);
  std::vector<Vector> two(2, Vector::Zero(1));
  CHECK_THROWS_AS(Trajectory(grid, two), ConfigError);
}

TEST_CASE("evaluate is exact at grid nodes and linear between them") {
  TimeGrid grid(0.0, 1.0, 1);
  std::vector<Vector> values = {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)};
  Trajectory traj(grid, values);
  CHECK(evaluate(traj, 0.5)[0] == doctest::Approx(0.5));

  SUBCASE("constant trajectory evaluates to the constant everywhere") {
    TimeGrid g(0.0, 3.0, 7);
    std::vector<Vector> c(8, Vector::Constant(2, 4.25));
    Trajectory t(g, c);
    for (double s : {0.0, 0.1, 1.7, 2.999, 3.0}) {
      CHECK(evaluate(t, s)[0] == doctest::Approx(4.25).epsilon(1e-15));
      CHECK(evaluate(t, s)[1] == doctest::Approx(4.25).epsilon(1e-15));
    }
  }
}

TEST_CASE("evaluate returns node values bitwise for random grids") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int m = 1 + static_cast<int>(gen() % 97);
    const double t0 = unif(gen);
    const double t1 = t0 + 0.5 + std::abs(unif(gen));
    TimeGrid grid(t0, t1, m);
    std::vector<Vector> values;
    for (int j = 0; j <= m; ++j) values.push_back(Vector::Constant(3, unif(gen)));
    Trajectory traj(grid, values);
    for (int j = 0; j <= m; ++j) {
      const Vector v = evaluate(traj, grid.node(j));
      CHECK(v[0] == values[static_cast<size_t>(j)][0]);
      CHECK(v[1] == values[static_cast<size_t>(j)][1]);
      CHECK(v[2] == values[static_cast<size_t>(j)][2]);
    }
  }
}

TEST_CASE("midpoint evaluation equals the mean of adjacent nodes") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  TimeGrid grid(0.0, 2.0, 64);
  std::vector<Vector> values;
  for (int j = 0; j <= 64; ++j) values.push_back(Vector::Constant(1, unif(gen)));
  Trajectory traj(grid, values);
  for (int j = 0; j < 64; ++j) {
    const double mid = 0.5 * (grid.node(j) + grid.node(j + 1));
    const double expected = 0.5 * (values[static_cast<size_t>(j)][0] +
                                   values[static_cast<size_t>(j) + 1][0]);
    CHECK(std::abs(evaluate(traj, mid)[0] - expected) <= 1e-14);
  }
}

TEST_CASE("interpolating a dense sine sampling reproduces the function") {
  TimeGrid grid(0.0, 10.0, 1000);
  std::vector<Vector> values;
  for (int j = 0; j <= 1000; ++j) values.push_back(Vector::Constant(1, std::sin(grid.node(j))));
  Trajectory traj(grid, values);
  const double pi = 3.14159265358979323846;
  CHECK(std::abs(evaluate(traj, pi)[0] - std::sin(pi)) <= 1e-4);
}

TEST_CASE("evaluate rejects arguments outside the horizon") {
  TimeGrid grid(0.0, 1.0, 4);
  Trajectory traj(grid, std::vector<Vector>(5, Vector::Zero(1)));
  CHECK_THROWS_AS(evaluate(traj, -0.01), std::domain_error);
  CHECK_THROWS_AS(evaluate(traj, 1.01), std::domain_error);
}

TEST_CASE("MatrixTrajectory flagged spd rejects asymmetric nodes") {
  TimeGrid grid(0.0, 1.0, 1);
  Matrix bad(2, 2);
  bad << 1.0, 0.5, 0.0, 1.0;
  std::vector<Matrix> nodes = {Matrix::Identity(2, 2), bad};
  CHECK_THROWS_AS(MatrixTrajectory(grid, nodes, true), ConfigError);
  CHECK_NOTHROW(MatrixTrajectory(grid, nodes, false));
}

TEST_CASE("validate_dimensions flags mismatched tuples") {
  SharedModel shared;
  shared.b = Matrix::Zero(2, 1);
  shared.c = Matrix::Zero(1, 2);
  shared.x0 = Vector::Zero(2);
  shared.horizon = 1.0;

  SystemTuple good{Matrix::Zero(2, 2), SpdMatrix::scaled_identity(2, 1.0),
                   SpdMatrix::scaled_identity(1, 1.0), SpdMatrix::scaled_identity(1, 1.0)};
  CHECK_NOTHROW(validate_dimensions(good, shared));

  SystemTuple bad_a = good;
  bad_a.a = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(validate_dimensions(bad_a, shared), ConfigError);

  SystemTuple bad_q{Matrix::Zero(2, 2), SpdMatrix::scaled_identity(2, 1.0),
                    SpdMatrix::scaled_identity(1, 1.0), SpdMatrix::scaled_identity(2, 1.0)};
  CHECK_THROWS_AS(validate_dimensions(bad_q, shared), ConfigError);
}
