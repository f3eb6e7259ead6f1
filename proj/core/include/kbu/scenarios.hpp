#pragma once

#include <string>
#include <vector>

#include "kbu/ensemble.hpp"

namespace kbu {

/// A fully configured benchmark: parameter family, shared model, grid, the
/// designated true member, the data-generation covariances, and the default
/// probe members for precision diagnostics.
struct ScenarioBundle {
  std::string name;
  ParameterSpace space;
  SharedModel shared;
  TimeGrid grid;
  int true_index;  // member realizing the hidden parameter
  SpdMatrix gamma;
  SpdMatrix r_cov;
  SpdMatrix q_cov;
  std::vector<int> probe_members;
};

/// Damped harmonic oscillator (unit mass and spring constant) with uncertain
/// damping sigma on a 101-point arithmetic grid over [0.1, 3]. State (z, dz),
/// position measured, T = 10.
///
/// `spread_alpha` contracts the damping family about its midpoint 1.55:
/// sigma -> 1.55 + alpha (sigma - 1.55). The default 1 keeps the family as
/// published; `sigma_bar` must belong to the (possibly contracted) family.
ScenarioBundle oscillator_scenario(double sigma_bar, int num_intervals = 1000,
                                   double spread_alpha = 1.0);

/// Two amplidynes in series (four circuit components) with uncertain
/// inductances sigma = (L2, L3, L4) on a 5x5x5 product family, constant unit
/// input voltage entering as a known forcing term, and the last component's
/// voltage measured. T = 10.
ScenarioBundle amplidyne_scenario(const Vector& sigma_bar, int num_intervals = 1000);

/// Reserved CLI scenario identifiers.
std::vector<std::string> scenario_names();

}  // namespace kbu
