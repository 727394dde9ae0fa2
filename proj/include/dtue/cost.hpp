#pragma once

#include "dtue/bathtub.hpp"

namespace dtue {

enum class PenaltyShape { piecewise_linear, smooth_arctan };

// alpha-beta-gamma scheduling preferences: cost per second of travel, earliness, lateness.
struct SchedulingPrefs {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 2.0;
  PenaltyShape penalty = PenaltyShape::piecewise_linear;

  void validate() const;  // requires alpha > beta > 0 and gamma > 0
  double beta_over_alpha() const { return beta / alpha; }
  double gamma_over_alpha() const { return gamma / alpha; }

  // beta = 0.4 + 0.2k/9, gamma = 1.5 + k/9, alpha = 1.
  static SchedulingPrefs lamotte_k(double k);
};

// Equilibrium speed-ratio band: lower = alpha/(alpha+gamma), upper = alpha/(alpha-beta).
struct OptimalityBand {
  double lower = 0.0;
  double upper = 0.0;
};
OptimalityBand optimality_band(const SchedulingPrefs& prefs);

// Arrival penalty per unit mass, divided by alpha. `deviation_s` is the signed
// arrival-minus-desired gap measured between bin midpoints.
double normalized_arrival_penalty(double deviation_s, const SchedulingPrefs& prefs);

// Smooth alternative to the piecewise-linear penalty: the integral of (w(s) - 1)
// between desired and actual arrival, w(s) = (2+gamma-beta)/2 + arctan(4(s-t_a))(gamma+beta)/pi.
// Asymptotic slopes are -beta (early) and gamma (late); evaluated in closed form.
double smooth_arrival_penalty(double deviation_s, const SchedulingPrefs& prefs);

// Trip cost scaled by 1/alpha: travel time plus normalized arrival penalty. The solver
// works in these units so that scaling (alpha, beta, gamma) jointly cannot perturb
// comparisons; multiply by alpha to recover the reported cost.
double normalized_trip_cost(const CharacteristicDistance& zeta, int tau_d, int kappa, int tau_a,
                            const SchedulingPrefs& prefs);

// J = alpha*T + beta*(earliness) + gamma*(lateness); earliness/lateness between the
// actual and desired arrival bin midpoints. Throws HorizonOverflowError if unfinished.
double trip_cost(const CharacteristicDistance& zeta, int tau_d, int kappa, int tau_a,
                 const SchedulingPrefs& prefs);

enum class FocClass { early_optimal, late_optimal, ontime_optimal, violating };

struct FocResult {
  FocClass cls = FocClass::ontime_optimal;
  double residual = 0.0;  // distance of the speed ratio to the admissible set when violating
  double speed_ratio = 0.0;
};

// First-order-condition check: the ratio v(departure bin)/v(arrival bin) must equal
// alpha/(alpha-beta) for early arrivals, alpha/(alpha+gamma) for late ones, and lie
// inside the band for on-time ones, all within tol.
FocResult classify_foc(const CharacteristicDistance& zeta, int tau_d, int kappa, int tau_a,
                       const SchedulingPrefs& prefs, double tol = 0.1);

}  // namespace dtue
