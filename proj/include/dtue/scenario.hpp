#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dtue/baseline.hpp"
#include "dtue/equilibrium.hpp"

namespace dtue {

// A run configuration parsed from the plain-text scenario format:
//
//   [demand]                      # either a class table or a CSV path
//   seed = 1
//   total_trips = 11235
//   class = <share> <mean_length_m> <spread_m> <desired_arrival_s> <win_start_s> <win_end_s>
//   csv_path = demand.csv
//
//   [speed]
//   kind = quadratic              # greenshields_linear | quadratic | table
//   v_max_mps = 13.28
//   v_min_mps = 1.5
//   capacity_mass = 1.0
//   point = <mass> <speed_mps>    # table kind only, repeated
//
//   [prefs]
//   alpha = 1.0
//   beta = 0.5
//   gamma = 2.0
//   k = 5                         # alternative: beta = 0.4+0.2k/9, gamma = 1.5+k/9
//
//   [grid]
//   dt_s = 1.0
//   dx_m = 13.28                  # default: v_max*dt
//   horizon_s = 15012
//   horizon_cap_s = 60048         # default: 16x horizon
//
//   [solver]
//   max_iter = 300
//   tol = 1e-2
//   epsilon = 0.0
//   seed = 1
//   selection = cost_sorted       # cost_sorted | uniform_random
//
// `#` starts a comment; keys are `name = value`; `class` and `point` may repeat.
struct Scenario {
  // demand
  std::vector<TripClass> classes;
  std::optional<std::filesystem::path> demand_csv;
  int total_trips = 0;
  std::uint64_t demand_seed = 12345;

  SpeedFunction speed = SpeedFunction::greenshields(1.0, 0.5);
  SchedulingPrefs prefs;

  double dt_s = 1.0;
  double dx_m = 0.0;  // 0 = v_max * dt
  double horizon_s = 0.0;
  double horizon_cap_s = 0.0;

  SolverOptions solver;

  static Scenario load(const std::filesystem::path& path);
  void validate() const;

  DemandProfile build_demand() const;
  Grid build_grid(const DemandProfile& profile) const;
};

struct RunOutput {
  DisaggInFlow mu;
  EquilibriumReport report;
  CharacteristicDistance zeta;
  NetworkSeries series;
};

// Full solve pipeline: demand -> grid -> solver -> consistent zeta/series.
RunOutput run_scenario(const Scenario& sc, Selection selection);

// Writes report.txt, mu.csv, series.csv, curves.csv, indicator.csv into out_dir.
void write_run_outputs(const RunOutput& out, const std::filesystem::path& out_dir);

}  // namespace dtue
