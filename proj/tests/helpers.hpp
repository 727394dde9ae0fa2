#pragma once

#include <string>
#include <vector>

#include "dtue/demand.hpp"
#include "dtue/equilibrium.hpp"

namespace dtue::testing {

inline std::string source_dir() { return DTUE_SOURCE_DIR; }
inline std::string scenario_path(const std::string& name) {
  return source_dir() + "/scenarios/" + name;
}

// Table of the seven Lyon-North classes, time origin 6:30 AM. Counts per class at
// 11,235 total trips: 1543, 1555, 1732, 2056, 1691, 1328, 1330.
inline std::vector<TripClass> lyon_classes(double spread_m = 800.0) {
  auto cls = [spread_m](double share, double mean_km, double desired_s, double w0, double w1) {
    TripClass c;
    c.share = share;
    c.mean_trip_length_m = mean_km * 1000.0;
    c.trip_length_spread_m = spread_m;
    c.desired_arrival_s = desired_s;
    c.arrival_window_start_s = w0;
    c.arrival_window_end_s = w1;
    return c;
  };
  return {
      cls(0.1373, 2.53, 1800.0, 0.0, 2700.0),
      cls(0.1384, 2.58, 3600.0, 2700.0, 4500.0),
      cls(0.1542, 2.55, 5400.0, 4500.0, 6300.0),
      cls(0.1830, 2.65, 7200.0, 6300.0, 8100.0),
      cls(0.1505, 2.63, 9000.0, 8100.0, 9900.0),
      cls(0.1182, 2.70, 10800.0, 9900.0, 11700.0),
      cls(0.1184, 2.63, 14400.0, 11700.0, 14400.0),
  };
}

struct Cell {
  int tau_a;
  int kappa;
  double mass;
};

// Direct construction of a demand grid from (tau_a, kappa, mass) cells.
inline DiscreteDemand cell_demand(const std::vector<Cell>& cells, double dt_s, double dx_m,
                                  int n_ta = 0, int n_k = 0) {
  DiscreteDemand d;
  d.dt_s = dt_s;
  d.dx_m = dx_m;
  for (const Cell& c : cells) {
    n_ta = std::max(n_ta, c.tau_a + 1);
    n_k = std::max(n_k, c.kappa + 1);
  }
  d.n_ta = n_ta;
  d.n_k = n_k;
  d.pi.assign(static_cast<std::size_t>(n_ta) * n_k, 0.0);
  for (const Cell& c : cells) d.at(c.tau_a, c.kappa) += c.mass;
  return d;
}

inline InFlowGrid pulse_inflow(int tau_d, int kappa, double mass, double dt_s, double dx_m,
                               int n_t, int n_k) {
  InFlowGrid p;
  p.dt_s = dt_s;
  p.dx_m = dx_m;
  p.n_t = n_t;
  p.n_k = n_k;
  p.p.assign(static_cast<std::size_t>(n_t) * n_k, 0.0);
  p.at(tau_d, kappa) = mass;
  return p;
}

}  // namespace dtue::testing
