#pragma once
// Small agents with two-step horizons and grid-search references for their proxes.
#include <functional>

#include "asyncfb/dispatch.hpp"

namespace toys {

using asyncfb::BatteryAgent;
using asyncfb::BuildingAgent;
using asyncfb::Vec;

/// One state, one input, two steps; the band is active near the optimum.
BuildingAgent building();
BatteryAgent battery();

/// Prox objectives written from the state recursions, not the condensed form.
double building_prox_objective(const BuildingAgent& b, double gamma, const Vec& v, const Vec& u);
double battery_prox_objective(const BatteryAgent& b, double gamma, const Vec& v, const Vec& p);

/// Two-stage grid search over [lo, hi]^2: full box, then a window around the coarse winner.
Vec grid_argmin(const std::function<double(const Vec&)>& f, const Vec& lo, const Vec& hi);

/// Largest |prox - grid| over a few gammas and inputs, for the building and the battery.
double building_grid_error(std::uint64_t seed);
double battery_grid_error(std::uint64_t seed);

/// Pairs out of 1000 violating ||Px - Py||^2 <= <Px - Py, x - y>.
long firm_violations(const std::function<Vec(const Vec&)>& op, Eigen::Index dim, double scale, std::uint64_t seed);

} // namespace toys
