#pragma once

#include <cstdint>

#include "dtue/cost.hpp"
#include "dtue/equilibrium.hpp"

namespace dtue {

// Finite-n micro-simulation of the original departure-time game. This is the
// brute-force ground truth for validating the mean-field solver, so it deliberately
// steps per-agent remaining distances instead of reusing the characteristic-distance
// machinery; only the SpeedFunction is shared.

struct Agent {
  double departure_s = 0.0;
  double length_m = 0.0;
  double desired_arrival_s = 0.0;
};

struct AgentList {
  std::vector<Agent> agents;
  int n() const { return static_cast<int>(agents.size()); }
  void validate() const;
};

struct MicroResult {
  std::vector<double> arrivals_s;  // one per agent
  NetworkSeries series;            // accumulation built from active counts / n
};

// Time-stepped: speed = V(active_count/n) held for each step; every active agent's
// remaining distance shrinks by speed*dt; exits are linearly interpolated within the
// step. A lone agent (n = 1) sees V(1) while traveling.
MicroResult micro_simulate(const AgentList& agents, const SpeedFunction& v, double dt_s,
                           double horizon_cap_s);

// Scheduling costs of every agent under the simulated arrivals (same alpha-beta-gamma
// convention as the mean-field cost: penalties between arrival and desired bin midpoints).
std::vector<double> micro_costs(const AgentList& agents, const SpeedFunction& v,
                                const SchedulingPrefs& prefs, double dt_s, double horizon_cap_s);

// Maximum unilateral cost improvement over all agents and all departure bins in
// [0, n_bins): every alternative is re-simulated with the other agents held fixed.
// Zero at an exact finite-n Nash point. Intended for small n and grids.
double nash_gap(const AgentList& agents, const SpeedFunction& v, const SchedulingPrefs& prefs,
                double dt_s, int n_bins, double horizon_cap_s);

// i.i.d. sample of n agents from the measure mu: departure at the bin start, length at
// the bin midpoint, desired arrival at the bin midpoint. Deterministic for fixed seed.
AgentList sample_agents(const DisaggInFlow& mu, int n, std::uint64_t seed);

}  // namespace dtue
