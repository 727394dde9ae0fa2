#include <doctest.h>

#include <cmath>

#include "dtue/cost.hpp"
#include "dtue/errors.hpp"
#include "helpers.hpp"

using namespace dtue;

namespace {

CharacteristicDistance constant_zeta(double speed, double dt, double dx, int n_t) {
  CharacteristicDistance z;
  z.dt_s = dt;
  z.dx_m = dx;
  z.zeta_m.assign(static_cast<std::size_t>(n_t) + 1, 0.0);
  for (int i = 1; i <= n_t; ++i) z.zeta_m[i] = z.zeta_m[i - 1] + speed * dt;
  return z;
}

}  // namespace

TEST_CASE("trip cost: direct substitution") {
  // constant speed 10 m/s, dx = 20 -> bin 0 midpoint 10 m travels in 1 s.
  // pick bin 4 (midpoint 90 m): T = 9 s... we want T = 10, arrive 5 early.
  // dx = 20, kappa=9 -> midpoint 190 m; T = 19 s. Simplest: craft directly.
  SchedulingPrefs prefs{1.0, 0.5, 2.0};
  CharacteristicDistance z = constant_zeta(10.0, 1.0, 20.0, 400);

  // departure bin 0, kappa 4: midpoint 90 m, T = 9 s, arrival bin 9
  // desired bin 14 -> 5 bins early at dt=1 -> J = 9 + 0.5*5 = 11.5
  CHECK(trip_cost(z, 0, 4, 14, prefs) == doctest::Approx(11.5).epsilon(1e-12));
  // on time: desired bin 9 -> J = alpha*T exactly
  CHECK(trip_cost(z, 0, 4, 9, prefs) == doctest::Approx(9.0).epsilon(1e-12));
  // late by 20 bins with the k=5 preferences
  SchedulingPrefs k5 = SchedulingPrefs::lamotte_k(5.0);
  CHECK(k5.beta == doctest::Approx(0.4 + 1.0 / 9.0).epsilon(1e-12));
  CHECK(k5.gamma == doctest::Approx(1.5 + 5.0 / 9.0).epsilon(1e-12));
  // T = 100 s: kappa with midpoint 1000 at dx=20 -> none; use kappa 49 (990 m, T=99)
  // craft the paper-style arithmetic directly instead:
  double J = 1.0 * 100.0 + k5.gamma * 20.0;
  CHECK(J == doctest::Approx(141.111).epsilon(1e-4));
  // and through the API: arrival bin = desired bin + 20
  double j_api = trip_cost(z, 0, 49, /*tau_a=*/99 - 20, k5);
  CHECK(j_api == doctest::Approx(99.0 + k5.gamma * 20.0).epsilon(1e-12));
}

TEST_CASE("optimality band") {
  SchedulingPrefs prefs{1.0, 0.5, 2.0};
  OptimalityBand b = optimality_band(prefs);
  CHECK(b.lower == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(b.upper == doctest::Approx(2.0).epsilon(1e-15));

  OptimalityBand k5 = optimality_band(SchedulingPrefs::lamotte_k(5.0));
  CHECK(k5.lower == doctest::Approx(0.32727).epsilon(1e-4));
  CHECK(k5.upper == doctest::Approx(2.04545).epsilon(1e-4));

  OptimalityBand tight = optimality_band({1.0, 1e-9, 1e-9});
  CHECK(tight.lower == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(tight.upper == doctest::Approx(1.0).epsilon(1e-8));

  SchedulingPrefs bad{1.0, 1.5, 2.0};
  CHECK_THROWS_AS(optimality_band(bad), ValidationError);
}

TEST_CASE("classify_foc: constant speed is on-time optimal, jam violates") {
  SchedulingPrefs prefs{1.0, 0.5, 2.0};
  CharacteristicDistance z = constant_zeta(10.0, 1.0, 20.0, 100);
  // ratio 1 lies inside every band
  FocResult r = classify_foc(z, 0, 4, 9, prefs, 0.1);
  CHECK(r.cls == FocClass::ontime_optimal);
  CHECK(r.speed_ratio == doctest::Approx(1.0));

  // free-flow departure into a jam, arriving late: ratio far above the band
  CharacteristicDistance zj;
  zj.dt_s = 1.0;
  zj.dx_m = 20.0;
  zj.zeta_m.assign(101, 0.0);
  for (int i = 1; i <= 100; ++i) {
    double v = i <= 3 ? 10.0 : 1.0;  // jam from bin 3 on
    zj.zeta_m[i] = zj.zeta_m[i - 1] + v;
  }
  // kappa 0: midpoint 10 m; departing bin 0 at speed 10 arrives inside bin 1
  // kappa 2: midpoint 50 m; departs at 10 m/s, finishes deep in the jam
  FocResult rj = classify_foc(zj, 0, 2, 1, prefs, 0.1);
  CHECK(rj.cls == FocClass::violating);
  CHECK(rj.speed_ratio == doctest::Approx(10.0));
  CHECK(rj.residual > 0.0);
}

TEST_CASE("positive scaling multiplies costs and keeps the band fixed points") {
  SchedulingPrefs prefs{1.0, 0.5, 2.0};
  SchedulingPrefs scaled{3.0, 1.5, 6.0};
  CharacteristicDistance z = constant_zeta(10.0, 1.0, 20.0, 200);

  for (int ta : {5, 9, 30}) {
    double j1 = trip_cost(z, 0, 4, ta, prefs);
    double j3 = trip_cost(z, 0, 4, ta, scaled);
    CHECK(j3 == doctest::Approx(3.0 * j1).epsilon(1e-12));
  }
  OptimalityBand b1 = optimality_band(prefs);
  OptimalityBand b3 = optimality_band(scaled);
  CHECK(b1.lower == doctest::Approx(b3.lower).epsilon(1e-15));
  CHECK(b1.upper == doctest::Approx(b3.upper).epsilon(1e-15));
}

TEST_CASE("piecewise linearity with the kink at the desired arrival") {
  SchedulingPrefs prefs{1.0, 0.5, 2.0};
  CharacteristicDistance z = constant_zeta(10.0, 1.0, 20.0, 400);
  const int kappa = 4;  // T = 9 s from any bin
  const int tau_a = 100;
  // departing at bin 91 arrives in bin 100 (on time)
  double on_time = trip_cost(z, 91, kappa, tau_a, prefs);
  for (int shift = 1; shift <= 20; ++shift) {
    double early = trip_cost(z, 91 - shift, kappa, tau_a, prefs);
    double late = trip_cost(z, 91 + shift, kappa, tau_a, prefs);
    CHECK(early - on_time == doctest::Approx(0.5 * shift).epsilon(1e-12));
    CHECK(late - on_time == doctest::Approx(2.0 * shift).epsilon(1e-12));
  }
}

TEST_CASE("smooth arctan penalty: closed form matches quadrature, slopes match beta/gamma") {
  SchedulingPrefs prefs = SchedulingPrefs::lamotte_k(5.0);
  auto w_minus_1 = [&](double s) {
    return (2.0 + prefs.gamma - prefs.beta) / 2.0 +
           std::atan(4.0 * s) * (prefs.gamma + prefs.beta) / M_PI - 1.0;
  };
  for (double d : {-30.0, -2.0, -0.3, 0.4, 3.0, 25.0}) {
    // trapezoid quadrature of the defining integral
    const int n = 200000;
    double h = d / n, acc = 0.0;
    for (int i = 0; i < n; ++i) acc += 0.5 * (w_minus_1(i * h) + w_minus_1((i + 1) * h)) * h;
    CHECK(smooth_arrival_penalty(d, prefs) == doctest::Approx(acc).epsilon(1e-6));
  }
  // asymptotic slopes: gamma when late, -beta when early
  double late_slope = (smooth_arrival_penalty(2000.0, prefs) -
                       smooth_arrival_penalty(1000.0, prefs)) / 1000.0;
  double early_slope = (smooth_arrival_penalty(-2000.0, prefs) -
                        smooth_arrival_penalty(-1000.0, prefs)) / -1000.0;
  CHECK(late_slope == doctest::Approx(prefs.gamma).epsilon(1e-3));
  CHECK(early_slope == doctest::Approx(-prefs.beta).epsilon(1e-3));
  CHECK(smooth_arrival_penalty(0.0, prefs) == 0.0);
}

TEST_CASE("prefs validation") {
  CHECK_THROWS_AS((SchedulingPrefs{1.0, 1.0, 2.0}.validate()), ValidationError);
  CHECK_THROWS_AS((SchedulingPrefs{1.0, 0.5, 0.0}.validate()), ValidationError);
  CHECK_NOTHROW((SchedulingPrefs{2.0, 0.5, 0.1}.validate()));
}
