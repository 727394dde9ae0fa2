#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace dtue {

// One homogeneous group of travelers: a mass share, a trip-length distribution
// (uniform on mean +- spread, truncated to stay positive) and a desired arrival time.
struct TripClass {
  double share = 0.0;                  // mass fraction in [0,1]
  double mean_trip_length_m = 0.0;     // > 0
  double trip_length_spread_m = 0.0;   // half-width of the uniform draw; 0 = constant
  double desired_arrival_s = 0.0;
  double arrival_window_start_s = 0.0;
  double arrival_window_end_s = 0.0;
  double arrival_jitter_s = 0.0;       // uniform +- jitter on desired arrival; default off
  std::optional<int> count_hint;

  void validate() const;
};

struct Trip {
  double length_m = 0.0;
  double desired_arrival_s = 0.0;
  double weight = 0.0;  // mass fraction; all weights sum to 1
  int class_id = 0;
};

// Trip-level demand with its bounding box. Weights are mean-field mass fractions,
// never absolute counts; the trip count itself is metadata.
struct DemandProfile {
  std::vector<Trip> trips;
  double x_min_m = 0.0;
  double x_max_m = 0.0;
  double t_a_min_s = 0.0;
  double t_a_max_s = 0.0;

  // Computes the bounding box from the trips and validates all invariants.
  static DemandProfile from_trips(std::vector<Trip> trips);
  void validate() const;
  double total_weight() const;
};

// The demand grid pi(tau_a, kappa): cell (tau_a, kappa) holds the mass of trips with
// desired arrival in [tau_a*dt, (tau_a+1)*dt) and length in [kappa*dx, (kappa+1)*dx).
struct DiscreteDemand {
  std::vector<double> pi;  // row-major, pi[tau_a * n_k + kappa]
  double dt_s = 0.0;
  double dx_m = 0.0;
  int n_ta = 0;
  int n_k = 0;

  double at(int tau_a, int kappa) const { return pi[static_cast<std::size_t>(tau_a) * n_k + kappa]; }
  double& at(int tau_a, int kappa) { return pi[static_cast<std::size_t>(tau_a) * n_k + kappa]; }
  double total_mass() const;
  // Demand-regularity diagnostic: max over kappa of (sum_tau_a pi) / dx.
  double regularity_max() const;
  void validate() const;
};

// Builds a trip list from the class table. Deterministic for fixed (classes, total_trips, seed);
// per class, round(share * total_trips) trips are drawn in class order.
DemandProfile synthesize_demand(const std::vector<TripClass>& classes, int total_trips,
                                std::uint64_t seed);

// CSV schema: header `length_m,desired_arrival_s,weight,class_id`; weight and class_id optional.
DemandProfile load_demand_csv(const std::filesystem::path& path);
void write_demand_csv(const DemandProfile& profile, const std::filesystem::path& path);

// Bins every trip at (floor(t_a/dt), floor(x/dx)); total mass is preserved and the
// result is independent of the trip ordering (bit-identical under permutation).
DiscreteDemand discretize_demand(const DemandProfile& profile, double dt_s, double dx_m);

}  // namespace dtue
