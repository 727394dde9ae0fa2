#include <doctest.h>

#include <cmath>

#include "dtue/errors.hpp"
#include "dtue/oracle.hpp"
#include "helpers.hpp"

using namespace dtue;

TEST_CASE("single agent at constant speed arrives after x/c") {
  auto v = SpeedFunction::greenshields(8.0, 8.0);
  AgentList a;
  a.agents.push_back({12.0, 96.0, 30.0});
  MicroResult res = micro_simulate(a, v, 1.0, 1e4);
  CHECK(res.arrivals_s[0] == doctest::Approx(12.0 + 12.0).epsilon(1e-12));
}

TEST_CASE("a lone agent sees V(1) while traveling") {
  auto v = SpeedFunction::greenshields(10.0, 2.0);
  AgentList a;
  a.agents.push_back({0.0, 100.0, 60.0});
  MicroResult res = micro_simulate(a, v, 1.0, 1e4);
  CHECK(res.arrivals_s[0] == doctest::Approx(100.0 / 2.0).epsilon(1e-12));
  CHECK(res.series.speed_mps[0] == 2.0);
}

TEST_CASE("identical agents arrive identically") {
  auto v = SpeedFunction::greenshields(10.0, 1.0);
  AgentList a;
  for (int i = 0; i < 25; ++i) a.agents.push_back({5.0, 300.0, 100.0});
  MicroResult res = micro_simulate(a, v, 1.0, 1e5);
  for (int i = 1; i < 25; ++i) CHECK(res.arrivals_s[i] == res.arrivals_s[0]);
}

TEST_CASE("oracle self-consistency with the scalar bathtub recursion") {
  // all agents share one departure and length, so the mean-field system has a
  // single cell and both paths must produce the same accumulation curve
  auto v = SpeedFunction::greenshields(10.0, 1.0);
  const int n = 50;
  AgentList a;
  for (int i = 0; i < n; ++i) a.agents.push_back({20.0, 255.0, 100.0});
  MicroResult res = micro_simulate(a, v, 1.0, 1e5);

  Grid g;
  g.dt_s = 1.0;
  g.dx_m = 10.0;
  g.n_t = res.series.n_t();
  g.n_k = 30;
  g.horizon_s = g.n_t;
  InFlowGrid p = testing::pulse_inflow(20, 25, 1.0, 1.0, 10.0, g.n_t, 30);
  CharacteristicDistance zeta = solve_characteristic(p, v, g);
  NetworkSeries mf = network_series(zeta, p, v);

  double sup = 0.0;
  for (int th = 0; th < res.series.n_t(); ++th)
    sup = std::max(sup, std::abs(res.series.accumulation[th] - mf.accumulation[th]));
  CHECK(sup <= 1e-12);  // same speeds, same exit bin: exact agreement here
  CHECK(std::abs(res.arrivals_s[0] - (20.0 + travel_time_of(zeta, 20, 25))) <= 1.0);
}

TEST_CASE("micro series conserves mass") {
  auto v = SpeedFunction::greenshields(10.0, 1.5);
  AgentList a;
  a.agents.push_back({0.0, 150.0, 50.0});
  a.agents.push_back({10.0, 400.0, 80.0});
  a.agents.push_back({10.0, 50.0, 80.0});
  MicroResult res = micro_simulate(a, v, 1.0, 1e5);
  const NetworkSeries& s = res.series;
  for (int th = 0; th < s.n_t(); ++th)
    CHECK(std::abs(s.cum_inflow[th] - s.cum_outflow[th] - s.accumulation[th]) <= 1e-12);
  for (double arr : res.arrivals_s) CHECK(std::isfinite(arr));
}

TEST_CASE("nash_gap: on-time agents at constant speed have no profitable deviation") {
  auto v = SpeedFunction::greenshields(10.0, 10.0);
  SchedulingPrefs prefs{1.0, 0.5, 2.0};
  AgentList a;
  // lengths multiples of 10 so arrivals are exactly on bin starts
  a.agents.push_back({91.0, 90.0, 100.5});
  a.agents.push_back({45.0, 50.0, 50.5});
  MicroResult res = micro_simulate(a, v, 1.0, 1e4);
  CHECK(res.arrivals_s[0] == 100.0);
  CHECK(nash_gap(a, v, prefs, 1.0, 150, 1e4) == 0.0);
}

TEST_CASE("nash_gap: a displaced agent has exactly its penalty as the gap") {
  auto v = SpeedFunction::greenshields(10.0, 10.0);
  SchedulingPrefs prefs{1.0, 0.5, 2.0};
  AgentList a;
  a.agents.push_back({81.0, 90.0, 100.5});  // arrives bin 90: 10 bins early
  MicroResult res = micro_simulate(a, v, 1.0, 1e4);
  CHECK(res.arrivals_s[0] == 90.0);
  double gap = nash_gap(a, v, prefs, 1.0, 150, 1e4);
  CHECK(gap == doctest::Approx(0.5 * 10.0).epsilon(1e-12));
}

TEST_CASE("sample_agents is seeded and draws from the measure") {
  std::vector<MuEntry> entries = {{10, 2, 20, 0.75}, {40, 5, 50, 0.25}};
  DisaggInFlow mu = DisaggInFlow::from_entries(entries, 1.0, 10.0);
  AgentList a = sample_agents(mu, 4000, 9);
  AgentList b = sample_agents(mu, 4000, 9);
  int first = 0;
  for (int i = 0; i < 4000; ++i) {
    CHECK(a.agents[i].departure_s == b.agents[i].departure_s);
    if (a.agents[i].departure_s == 10.0) ++first;
  }
  // (10,2,20) holds 3/4 of the mass
  CHECK(std::abs(first / 4000.0 - 0.75) < 0.03);
  CHECK(a.agents[0].length_m == doctest::Approx(25.0));
}

TEST_CASE("micro_simulate validates input and honors the cap") {
  auto v = SpeedFunction::greenshields(10.0, 1.0);
  AgentList bad;
  bad.agents.push_back({0.0, 0.0, 10.0});
  CHECK_THROWS_AS(micro_simulate(bad, v, 1.0, 1e4), ValidationError);

  AgentList slow;
  slow.agents.push_back({0.0, 1000.0, 10.0});  // 1000 s at v_min
  CHECK_THROWS_AS(micro_simulate(slow, v, 1.0, 100.0), HorizonOverflowError);
}
