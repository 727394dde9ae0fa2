#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dtue/demand.hpp"

namespace dtue {

enum class SpeedKind { greenshields_linear, quadratic, table };

// Nonincreasing map from active-mass fraction to network speed, bounded by
// [v_min, v_max]. Evaluations clamp mass into [0, 1] and speed into the bounds.
class SpeedFunction {
 public:
  static SpeedFunction greenshields(double v_max_mps, double v_min_mps, double capacity_mass = 1.0);
  static SpeedFunction quadratic(double v_max_mps, double v_min_mps, double capacity_mass = 1.0);
  // Piecewise-linear breakpoints (mass, speed); first mass must be 0, speeds nonincreasing.
  static SpeedFunction from_table(std::vector<std::pair<double, double>> points);

  double operator()(double mass) const;
  double v_max() const { return v_max_; }
  double v_min() const { return v_min_; }
  double capacity_mass() const { return capacity_; }
  SpeedKind kind() const { return kind_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }
  // Upper bound on |dV/dmass|, reported as a diagnostic.
  double lipschitz() const;

 private:
  SpeedFunction() = default;
  SpeedKind kind_ = SpeedKind::greenshields_linear;
  double v_max_ = 0.0;
  double v_min_ = 0.0;
  double capacity_ = 1.0;
  std::vector<std::pair<double, double>> table_;
};

inline double speed_at(const SpeedFunction& v, double mass) { return v(mass); }

struct Grid {
  double dt_s = 0.0;
  double dx_m = 0.0;
  double horizon_s = 0.0;      // T_max; n_t * dt >= horizon_s
  double horizon_cap_s = 0.0;  // auto-extension limit; 0 = 16x horizon
  int n_t = 0;
  int n_k = 0;

  double effective_cap_s() const { return horizon_cap_s > 0.0 ? horizon_cap_s : 16.0 * horizon_s; }
  // Throws ConfigurationError unless dx >= v_max*dt (a trip may not cross a bin per step).
  void validate(const SpeedFunction& v) const;
};

inline Grid make_grid(double dt_s, double dx_m, double horizon_s, double x_max_m,
                      double horizon_cap_s = 0.0) {
  Grid g;
  g.dt_s = dt_s;
  g.dx_m = dx_m;
  g.horizon_s = horizon_s;
  g.horizon_cap_s = horizon_cap_s;
  g.n_t = static_cast<int>(horizon_s / dt_s) + (horizon_s / dt_s > static_cast<int>(horizon_s / dt_s) ? 1 : 0);
  g.n_k = static_cast<int>(x_max_m / dx_m) + 1;
  return g;
}

// Representative trip length of bin kappa: its midpoint.
inline double bin_midpoint_m(int kappa, double dx_m) { return (kappa + 0.5) * dx_m; }

// Discrete characteristic travel distance: zeta[theta] is the distance a virtual
// traveler departing at t=0 has covered by theta*dt. Length n_t + 1, zeta[0] = 0,
// strictly increasing with per-step increments in [v_min*dt, v_max*dt].
struct CharacteristicDistance {
  std::vector<double> zeta_m;
  double dt_s = 0.0;
  double dx_m = 0.0;

  int n_t() const { return static_cast<int>(zeta_m.size()) - 1; }
  void validate(const SpeedFunction& v) const;
};

// Departures aggregated over desired arrival: mass departing in bin tau_d with length bin kappa.
struct InFlowEntry {
  int tau_d = 0;
  int kappa = 0;
  double mass = 0.0;
};

// Dense in-flow grid p(tau_d, kappa). The mean field of the discrete system.
struct InFlowGrid {
  std::vector<double> p;  // row-major, p[tau_d * n_k + kappa]
  double dt_s = 0.0;
  double dx_m = 0.0;
  int n_t = 0;
  int n_k = 0;

  double at(int tau_d, int kappa) const { return p[static_cast<std::size_t>(tau_d) * n_k + kappa]; }
  double& at(int tau_d, int kappa) { return p[static_cast<std::size_t>(tau_d) * n_k + kappa]; }
  double total_mass() const;
  std::vector<InFlowEntry> entries() const;  // nonzero cells, (tau_d, kappa) ascending
  // Checks p's length marginal against pi's (Eq.-level demand constraint), 1e-12 absolute.
  void validate_against(const DiscreteDemand& pi) const;
};

struct NetworkSeries {
  std::vector<double> accumulation;  // active-mass fraction c_tau
  std::vector<double> speed_mps;
  std::vector<double> cum_inflow;
  std::vector<double> cum_outflow;
  double dt_s = 0.0;
  // Phi(tau, kappa): active mass with remaining length > kappa*dx; filled on request.
  std::vector<double> remaining_dist;
  int n_k = 0;

  int n_t() const { return static_cast<int>(accumulation.size()); }
  double peak_accumulation() const;
};

struct SolveStats {
  double max_mass = 0.0;     // largest active-mass argument passed to V
  long clamped_evals = 0;    // evaluations with mass > 1
};

// Mass of trips in Gamma_theta(zeta): departed in [0, theta] with midpoint length
// exceeding zeta[theta] - zeta[tau_d]. Direct-sum contract form, O(theta * n_k).
double active_mass(const CharacteristicDistance& zeta, const InFlowGrid& p, int theta);

// Exact forward recursion v_theta = V(active mass), zeta[theta+1] = zeta[theta] + v_theta*dt.
// The discrete system is explicit: Gamma_theta depends only on zeta[0..theta].
CharacteristicDistance solve_characteristic(const InFlowGrid& p, const SpeedFunction& v,
                                            const Grid& g, SolveStats* stats = nullptr);
// Sparse-path overload; entries must be sorted by tau_d ascending.
CharacteristicDistance solve_characteristic(std::span<const InFlowEntry> entries,
                                            const SpeedFunction& v, const Grid& g,
                                            SolveStats* stats = nullptr);

// One application of the fixed-point map U: returns theta -> dt * sum_{tau<theta}
// V(active mass under zeta_in). Iterating from any start converges to
// solve_characteristic's output (Banach contraction).
CharacteristicDistance picard_operator(const CharacteristicDistance& zeta_in, const InFlowGrid& p,
                                       const SpeedFunction& v, const Grid& g);
CharacteristicDistance picard_operator(const CharacteristicDistance& zeta_in,
                                       std::span<const InFlowEntry> entries,
                                       const SpeedFunction& v, const Grid& g);

// Unique t with piecewise-linear zeta(t) = d. Exact inverse, since zeta is the
// integral of a piecewise-constant speed. Throws RangeError (d < 0) or
// HorizonOverflowError (d beyond zeta[n_t]).
double invert_distance(const CharacteristicDistance& zeta, double d_m);

// zeta^{-1}(midpoint(kappa) + zeta[tau_d]) - tau_d*dt, in seconds.
double travel_time_of(const CharacteristicDistance& zeta, int tau_d, int kappa);
// Continuous arrival clock time of a trip (tau_d, kappa); +inf if past the horizon.
double arrival_time_of(const CharacteristicDistance& zeta, int tau_d, int kappa);

// Arrival clock times for every departure bin of one length bin, exploiting that the
// arrival is monotone in tau_d. Unfinished trips get +inf.
std::vector<double> arrival_times_for_kappa(const CharacteristicDistance& zeta, int kappa);

NetworkSeries network_series(const CharacteristicDistance& zeta, const InFlowGrid& p,
                             const SpeedFunction& v, bool with_remaining_dist = false);
NetworkSeries network_series(const CharacteristicDistance& zeta,
                             std::span<const InFlowEntry> entries, const SpeedFunction& v,
                             int n_k, bool with_remaining_dist = false);

}  // namespace dtue
