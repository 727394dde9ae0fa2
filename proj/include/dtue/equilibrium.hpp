#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "dtue/cost.hpp"

namespace dtue {

// One atom of the dis-aggregated in-flow measure mu(tau_d, kappa, tau_a).
struct MuEntry {
  int tau_d = 0;
  int kappa = 0;
  int tau_a = 0;
  double mass = 0.0;
};

// Sparse mu, kept canonical: entries sorted by (tau_d, kappa, tau_a), duplicates
// merged, zero masses dropped. All solver state lives here; the canonical form is
// what makes runs reproducible independent of input ordering.
class DisaggInFlow {
 public:
  DisaggInFlow() = default;
  static DisaggInFlow from_entries(std::vector<MuEntry> entries, double dt_s, double dx_m);

  std::span<const MuEntry> entries() const { return entries_; }
  double dt_s() const { return dt_s_; }
  double dx_m() const { return dx_m_; }
  double total_mass() const;

  // Marginal over tau_a: the mean field p(tau_d, kappa), sorted by (tau_d, kappa).
  std::vector<InFlowEntry> marginal_entries() const;
  InFlowGrid marginal_p(const Grid& g) const;
  // Marginal over tau_d, as (tau_a, kappa, mass) triples sorted by (tau_a, kappa);
  // must reproduce the demand grid pi exactly.
  std::vector<MuEntry> arrival_marginal() const;

 private:
  std::vector<MuEntry> entries_;
  double dt_s_ = 0.0;
  double dx_m_ = 0.0;
};

enum class Selection { cost_sorted, uniform_random };
enum class StepRule { one_over_iter };

struct SolverOptions {
  int max_iter = 500;
  double tol = 1e-3;            // stop when the convergence indicator drops below
  double epsilon = 0.0;         // epsilon for the MFE residual reported at the end (cost units)
  std::uint64_t seed = 0;
  Selection selection = Selection::cost_sorted;
  StepRule step_rule = StepRule::one_over_iter;
  double trip_count = 1.0;      // metadata scale for total_travel_time_s
};

struct EquilibriumReport {
  int iterations = 0;
  std::vector<double> indicator_history;
  double final_indicator = 0.0;
  double avg_cost = 0.0;              // mass-weighted trip cost (alpha units)
  double total_travel_time_s = 0.0;   // mass-weighted mean travel time * trip_count
  double epsilon_residual_mass = 0.0;
  bool converged = false;

  // diagnostics
  double horizon_s_used = 0.0;
  int n_t_used = 0;
  std::vector<double> peak_accumulation_history;  // per iteration, after the move
  std::vector<double> max_inflow_density_history; // max p(tau_d,kappa)/(dt*dx) per iteration
  double initial_peak_accumulation = 0.0;
  double initial_indicator = 0.0;
  long clamped_speed_evals = 0;
  int clamped_initial_cells = 0;
};

// Free-flow back-propagation: all mass of cell (tau_a, kappa) departs at
// floor((tau_a*dt - midpoint/v_max)/dt), clamped at bin 0 (counted in *clamped_cells).
DisaggInFlow initial_solution(const DiscreteDemand& pi, const SpeedFunction& v,
                              int* clamped_cells = nullptr);

struct BestResponse {
  int tau_d = 0;
  double cost = 0.0;  // attained minimum, alpha units
};

// Exhaustive cost minimization over departure bins in [window.first, window.last],
// ties broken by earliest bin. Throws HorizonOverflowError if no candidate finishes.
BestResponse best_response(const CharacteristicDistance& zeta, int kappa, int tau_a,
                           const SchedulingPrefs& prefs, std::pair<int, int> window);

// Exact mass transport of the demand grid along a decision map D(tau_a, kappa) -> tau_d.
DisaggInFlow demand_transfer(const std::function<int(int, int)>& decision,
                             const DiscreteDemand& pi);

// Mass-weighted relative best-response gap: sum of mass*(J - J_best)/max(J_best, 1e-9),
// in normalized (alpha-free) cost units. Zero iff every cell is at a best response.
double convergence_indicator(const DisaggInFlow& mu, const CharacteristicDistance& zeta,
                             const SchedulingPrefs& prefs);

// Mass of entries whose cost exceeds their best-response cost by more than epsilon
// (cost units). mu is an epsilon-MFE of the discrete system iff this returns 0.
double epsilon_mfe_check(const DisaggInFlow& mu, const CharacteristicDistance& zeta,
                         const SchedulingPrefs& prefs, double epsilon);

// The fixed-point heuristic: each iteration solves the bathtub dynamics for the
// current mu, costs every entry, selects the top 1/k of the mass (by descending
// cost, or seeded-shuffled for the MSA baseline) and reassigns it to best responses.
// Deterministic given opts.seed; auto-extends the horizon by doubling up to the cap.
std::pair<DisaggInFlow, EquilibriumReport> heuristic_solve(const DiscreteDemand& pi,
                                                           const SpeedFunction& v,
                                                           const SchedulingPrefs& prefs,
                                                           const Grid& g,
                                                           const SolverOptions& opts);

// Re-solves the dynamics for mu's marginal, extending the horizon as needed.
// Shared by reporting paths; returns the zeta consistent with mu.
CharacteristicDistance solve_for(const DisaggInFlow& mu, const SpeedFunction& v, const Grid& g);

}  // namespace dtue
