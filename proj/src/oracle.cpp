#include "dtue/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "dtue/errors.hpp"
#include "dtue/rng.hpp"

namespace dtue {

void AgentList::validate() const {
  if (agents.empty()) throw ValidationError("agent list is empty");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!(agents[i].length_m > 0.0))
      throw ValidationError("agent " + std::to_string(i) + " has a nonpositive trip length");
    if (agents[i].departure_s < 0.0)
      throw ValidationError("agent " + std::to_string(i) + " departs before the horizon start");
  }
}

MicroResult micro_simulate(const AgentList& list, const SpeedFunction& v, double dt_s,
                           double horizon_cap_s) {
  if (!(dt_s > 0.0)) throw ValidationError("dt must be positive");
  list.validate();
  const int n = list.n();
  const double inv_n = 1.0 / static_cast<double>(n);

  // agents indexed by departure bin; they join the active set at the first bin
  // start at or after their departure and move a partial step until then
  std::vector<std::vector<int>> by_bin;
  for (int i = 0; i < n; ++i) {
    int bin = static_cast<int>(std::ceil(list.agents[i].departure_s / dt_s));
    if (static_cast<std::size_t>(bin) >= by_bin.size()) by_bin.resize(bin + 1);
    by_bin[static_cast<std::size_t>(bin)].push_back(i);
  }

  std::vector<double> remaining(n);
  for (int i = 0; i < n; ++i) remaining[i] = list.agents[i].length_m;

  MicroResult res;
  res.arrivals_s.assign(n, std::numeric_limits<double>::quiet_NaN());
  res.series.dt_s = dt_s;

  std::vector<int> active;
  int arrived = 0, activated = 0;
  int theta = 0;
  while (arrived < n) {
    if (theta * dt_s > horizon_cap_s)
      throw HorizonOverflowError("micro-simulation exceeded the horizon cap",
                                 static_cast<double>(n - arrived) * inv_n);
    const double t0 = theta * dt_s;
    if (static_cast<std::size_t>(theta) < by_bin.size())
      for (int i : by_bin[static_cast<std::size_t>(theta)]) {
        active.push_back(i);
        ++activated;
      }

    const double c = static_cast<double>(active.size()) * inv_n;
    const double speed = v(c);

    res.series.accumulation.push_back(c);
    res.series.speed_mps.push_back(speed);
    res.series.cum_inflow.push_back(static_cast<double>(activated) * inv_n);
    res.series.cum_outflow.push_back(static_cast<double>(arrived) * inv_n);

    for (std::size_t j = 0; j < active.size();) {
      int i = active[j];
      double step = speed * dt_s;
      if (remaining[i] <= step) {
        res.arrivals_s[i] = t0 + remaining[i] / speed;
        remaining[i] = 0.0;
        ++arrived;
        active[j] = active.back();
        active.pop_back();
      } else {
        remaining[i] -= step;
        ++j;
      }
    }

    // late departures move a partial step before they are first counted
    if (static_cast<std::size_t>(theta + 1) < by_bin.size())
      for (int i : by_bin[static_cast<std::size_t>(theta + 1)]) {
        double partial = ((theta + 1) * dt_s - list.agents[i].departure_s) * speed;
        if (partial > 0.0 && partial < remaining[i]) remaining[i] -= partial;
      }
    ++theta;
  }
  return res;
}

namespace {

double schedule_cost(const Agent& a, double arrival_s, const SchedulingPrefs& prefs, double dt_s) {
  double travel = arrival_s - a.departure_s;
  int abin = static_cast<int>(std::floor(arrival_s / dt_s));
  int dbin = static_cast<int>(std::floor(a.desired_arrival_s / dt_s));
  double dev = static_cast<double>(abin - dbin) * dt_s;
  double pen = dev > 0.0 ? prefs.gamma * dev : (dev < 0.0 ? prefs.beta * (-dev) : 0.0);
  return prefs.alpha * travel + pen;
}

}  // namespace

std::vector<double> micro_costs(const AgentList& agents, const SpeedFunction& v,
                                const SchedulingPrefs& prefs, double dt_s, double horizon_cap_s) {
  MicroResult res = micro_simulate(agents, v, dt_s, horizon_cap_s);
  std::vector<double> costs(agents.agents.size());
  for (std::size_t i = 0; i < costs.size(); ++i)
    costs[i] = schedule_cost(agents.agents[i], res.arrivals_s[i], prefs, dt_s);
  return costs;
}

double nash_gap(const AgentList& agents, const SpeedFunction& v, const SchedulingPrefs& prefs,
                double dt_s, int n_bins, double horizon_cap_s) {
  std::vector<double> base = micro_costs(agents, v, prefs, dt_s, horizon_cap_s);
  double gap = 0.0;
  AgentList probe = agents;
  for (std::size_t i = 0; i < agents.agents.size(); ++i) {
    double best = base[i];
    for (int bin = 0; bin < n_bins; ++bin) {
      probe.agents[i].departure_s = bin * dt_s;
      MicroResult res = micro_simulate(probe, v, dt_s, horizon_cap_s);
      best = std::min(best, schedule_cost(probe.agents[i], res.arrivals_s[i], prefs, dt_s));
    }
    probe.agents[i] = agents.agents[i];
    gap = std::max(gap, base[i] - best);
  }
  return gap;
}

AgentList sample_agents(const DisaggInFlow& mu, int n, std::uint64_t seed) {
  if (n <= 0) throw ValidationError("sample size must be positive");
  auto entries = mu.entries();
  if (entries.empty()) throw ValidationError("cannot sample from an empty measure");

  std::vector<double> cum(entries.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    acc += entries[i].mass;
    cum[i] = acc;
  }

  std::mt19937_64 eng(seed);
  AgentList out;
  out.agents.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double u = uniform01(eng) * acc;
    std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (idx >= entries.size()) idx = entries.size() - 1;
    const MuEntry& e = entries[idx];
    Agent a;
    a.departure_s = e.tau_d * mu.dt_s();
    a.length_m = bin_midpoint_m(e.kappa, mu.dx_m());
    a.desired_arrival_s = (e.tau_a + 0.5) * mu.dt_s();
    out.agents.push_back(a);
  }
  return out;
}

}  // namespace dtue
