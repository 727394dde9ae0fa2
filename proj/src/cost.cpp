#include "dtue/cost.hpp"

#include <cmath>

#include "dtue/errors.hpp"

namespace dtue {

void SchedulingPrefs::validate() const {
  if (!(alpha > beta && beta > 0.0))
    throw ValidationError("scheduling preferences require alpha > beta > 0");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
}

SchedulingPrefs SchedulingPrefs::lamotte_k(double k) {
  SchedulingPrefs p;
  p.alpha = 1.0;
  p.beta = 0.4 + 0.2 * k / 9.0;
  p.gamma = 1.5 + k / 9.0;
  p.validate();
  return p;
}

OptimalityBand optimality_band(const SchedulingPrefs& prefs) {
  prefs.validate();
  return {prefs.alpha / (prefs.alpha + prefs.gamma), prefs.alpha / (prefs.alpha - prefs.beta)};
}

double smooth_arrival_penalty(double deviation_s, const SchedulingPrefs& prefs) {
  // integral of (w(s) - 1) from desired to actual arrival, in closed form:
  //   int arctan(4u) du = u*arctan(4u) - ln(1 + 16u^2)/8
  const double d = deviation_s;
  const double base = 0.5 * (prefs.gamma - prefs.beta) * d;
  const double arc = d * std::atan(4.0 * d) - std::log1p(16.0 * d * d) / 8.0;
  return base + (prefs.gamma + prefs.beta) / M_PI * arc;
}

double normalized_arrival_penalty(double deviation_s, const SchedulingPrefs& prefs) {
  if (prefs.penalty == PenaltyShape::smooth_arctan)
    return smooth_arrival_penalty(deviation_s, prefs) / prefs.alpha;
  if (deviation_s > 0.0) return prefs.gamma_over_alpha() * deviation_s;
  if (deviation_s < 0.0) return prefs.beta_over_alpha() * (-deviation_s);
  return 0.0;
}

namespace {

// signed arrival-minus-desired gap, measured between bin midpoints
inline double bin_deviation_s(double arrival_s, int tau_a, double dt_s) {
  int arrival_bin = static_cast<int>(std::floor(arrival_s / dt_s));
  return static_cast<double>(arrival_bin - tau_a) * dt_s;
}

}  // namespace

double normalized_trip_cost(const CharacteristicDistance& zeta, int tau_d, int kappa, int tau_a,
                            const SchedulingPrefs& prefs) {
  double arrival = arrival_time_of(zeta, tau_d, kappa);
  if (!std::isfinite(arrival))
    throw HorizonOverflowError("trip (tau_d=" + std::to_string(tau_d) + ", kappa=" +
                               std::to_string(kappa) + ") does not finish inside the horizon");
  double t = arrival - tau_d * zeta.dt_s;
  return t + normalized_arrival_penalty(bin_deviation_s(arrival, tau_a, zeta.dt_s), prefs);
}

double trip_cost(const CharacteristicDistance& zeta, int tau_d, int kappa, int tau_a,
                 const SchedulingPrefs& prefs) {
  return prefs.alpha * normalized_trip_cost(zeta, tau_d, kappa, tau_a, prefs);
}

FocResult classify_foc(const CharacteristicDistance& zeta, int tau_d, int kappa, int tau_a,
                       const SchedulingPrefs& prefs, double tol) {
  const double dt = zeta.dt_s;
  double arrival = tau_d * dt + travel_time_of(zeta, tau_d, kappa);
  int arrival_bin = static_cast<int>(std::floor(arrival / dt));
  int speed_bin = std::min(arrival_bin, zeta.n_t() - 1);

  double v_dep = (zeta.zeta_m[tau_d + 1] - zeta.zeta_m[tau_d]) / dt;
  double v_arr = (zeta.zeta_m[speed_bin + 1] - zeta.zeta_m[speed_bin]) / dt;
  double ratio = v_dep / v_arr;
  OptimalityBand band = optimality_band(prefs);

  FocResult r;
  r.speed_ratio = ratio;
  if (arrival_bin < tau_a) {
    // early arrival: ratio must sit at the upper band edge
    r.cls = std::abs(ratio - band.upper) <= tol ? FocClass::early_optimal : FocClass::violating;
    r.residual = r.cls == FocClass::violating ? std::abs(ratio - band.upper) : 0.0;
  } else if (arrival_bin > tau_a) {
    r.cls = std::abs(ratio - band.lower) <= tol ? FocClass::late_optimal : FocClass::violating;
    r.residual = r.cls == FocClass::violating ? std::abs(ratio - band.lower) : 0.0;
  } else {
    double dist = 0.0;
    if (ratio < band.lower) dist = band.lower - ratio;
    if (ratio > band.upper) dist = ratio - band.upper;
    r.cls = dist <= tol ? FocClass::ontime_optimal : FocClass::violating;
    r.residual = r.cls == FocClass::violating ? dist : 0.0;
  }
  return r;
}

}  // namespace dtue
