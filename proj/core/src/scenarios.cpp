#include "kbu/scenarios.hpp"

#include <cmath>
#include <sstream>

namespace kbu {

namespace {

constexpr double kSigmaLookupTol = 1e-12;

int find_member(const std::vector<Vector>& labels, const Vector& target, const char* scenario) {
  for (size_t k = 0; k < labels.size(); ++k) {
    if (labels[k].size() == target.size() &&
        (labels[k] - target).cwiseAbs().maxCoeff() <= kSigmaLookupTol) {
      return static_cast<int>(k);
    }
  }
  std::ostringstream os;
  os << scenario << ": sigma_bar (";
  for (Eigen::Index i = 0; i < target.size(); ++i) os << (i ? ", " : "") << target[i];
  os << ") is not a member of the parameter family";
  throw ConfigError(os.str());
}

}  // namespace

ScenarioBundle oscillator_scenario(double sigma_bar, int num_intervals, double spread_alpha) {
  if (!(spread_alpha > 0.0) || spread_alpha > 1.0)
    throw ConfigError("oscillator_scenario: spread_alpha must lie in (0, 1]");

  constexpr int kFamilySize = 101;
  constexpr double kSpreadCenter = 1.55;  // midpoint of the published family
  const double mass = 1.0;
  const double spring = 1.0;

  std::vector<Matrix> a_list;
  std::vector<Vector> labels;
  a_list.reserve(kFamilySize);
  labels.reserve(kFamilySize);
  for (int j = 0; j < kFamilySize; ++j) {
    double sigma = 0.1 + (static_cast<double>(j) / (kFamilySize - 1)) * 2.9;
    // Recentering even with alpha = 1 would perturb the published values by
    // an ulp, so the identity contraction is skipped outright.
    if (spread_alpha != 1.0) sigma = kSpreadCenter + spread_alpha * (sigma - kSpreadCenter);
    Matrix a(2, 2);
    a << 0.0, 1.0, -spring / mass, -sigma / mass;
    a_list.push_back(std::move(a));
    labels.push_back(Vector::Constant(1, sigma));
  }

  SpdMatrix gamma = SpdMatrix::scaled_identity(2, 0.1);
  SpdMatrix r_cov = SpdMatrix::scaled_identity(1, 0.05);
  SpdMatrix q_cov = SpdMatrix::scaled_identity(1, 0.05);

  ParameterSpace space = build_parameter_space(std::move(a_list), {gamma}, {r_cov}, {q_cov});
  space.labels = std::move(labels);

  SharedModel shared;
  shared.b = Matrix(2, 1);
  shared.b << 0.0, 1.0;
  shared.c = Matrix(1, 2);
  shared.c << 1.0, 0.0;
  shared.x0 = Vector(2);
  shared.x0 << 1.0, 0.0;
  shared.horizon = 10.0;

  const int true_index =
      find_member(space.labels, Vector::Constant(1, sigma_bar), "oscillator_scenario");

  ScenarioBundle bundle{"oscillator",
                        std::move(space),
                        std::move(shared),
                        TimeGrid(0.0, 10.0, num_intervals),
                        true_index,
                        gamma,
                        r_cov,
                        q_cov,
                        {0, 50, 100}};  // sigma = 0.1, 1.55, 3.0 at spread_alpha = 1
  return bundle;
}

ScenarioBundle amplidyne_scenario(const Vector& sigma_bar, int num_intervals) {
  if (sigma_bar.size() != 3)
    throw ConfigError("amplidyne_scenario: sigma_bar must be the 3-vector (L2, L3, L4)");

  const double rho1 = 5.0, rho2 = 10.0, rho3 = 5.0, rho4 = 10.0;
  const double k1 = 20.0, k2 = 50.0, k3 = 20.0, k4 = 50.0;
  const double l1 = 0.5;
  const std::vector<double> sigma1 = {10.0, 12.5, 15.0, 17.5, 20.0};
  const std::vector<double> sigma2 = {0.5, 0.75, 1.0, 1.25, 1.5};
  const std::vector<double> sigma3 = {10.0, 17.5, 25.0, 32.5, 40.0};

  std::vector<Matrix> a_list;
  std::vector<Vector> labels;
  a_list.reserve(sigma1.size() * sigma2.size() * sigma3.size());
  for (double l2 : sigma1)
    for (double l3 : sigma2)
      for (double l4 : sigma3) {
        Matrix a = Matrix::Zero(4, 4);
        a(0, 0) = -rho1 / l1;
        a(1, 0) = k1 / l2;
        a(1, 1) = -rho2 / l2;
        a(2, 1) = k2 / l3;
        a(2, 2) = -rho3 / l3;
        a(3, 2) = k3 / l4;
        a(3, 3) = -rho4 / l4;
        a_list.push_back(std::move(a));
        Vector label(3);
        label << l2, l3, l4;
        labels.push_back(std::move(label));
      }

  Matrix gamma_m = Matrix::Zero(4, 4);
  gamma_m.diagonal() << 0.125, 0.25, 2.5, 5.0;
  SpdMatrix gamma(std::move(gamma_m));
  SpdMatrix r_cov = SpdMatrix::scaled_identity(1, 0.01);
  SpdMatrix q_cov = SpdMatrix::scaled_identity(1, 1600.0);

  ParameterSpace space = build_parameter_space(std::move(a_list), {gamma}, {r_cov}, {q_cov});
  space.labels = std::move(labels);

  SharedModel shared;
  shared.b = Matrix(4, 1);
  shared.b << 1.0 / l1, 0.0, 0.0, 0.0;
  shared.c = Matrix(1, 4);
  shared.c << 0.0, 0.0, 0.0, k4;
  shared.x0 = Vector(4);
  shared.x0 << 0.5, 1.0, 10.0, 20.0;
  // Known input e0(t) = 1 entering the first component.
  shared.forcing = [l1](double) {
    Vector f = Vector::Zero(4);
    f[0] = 1.0 / l1;
    return f;
  };
  shared.horizon = 10.0;

  const int true_index = find_member(space.labels, sigma_bar, "amplidyne_scenario");

  // sigma_k = (10, 0.5, 10) + (k-1) (2.5, 0.25, 7.5), k = 1..5.
  std::vector<int> probes = {0, 31, 62, 93, 124};

  ScenarioBundle bundle{"amplidyne",
                        std::move(space),
                        std::move(shared),
                        TimeGrid(0.0, 10.0, num_intervals),
                        true_index,
                        std::move(gamma),
                        std::move(r_cov),
                        std::move(q_cov),
                        std::move(probes)};
  return bundle;
}

std::vector<std::string> scenario_names() { return {"oscillator", "amplidyne"}; }

}  // namespace kbu
