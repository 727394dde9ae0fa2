#include "dtue/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "dtue/errors.hpp"
#include "dtue/rng.hpp"

namespace dtue {

namespace {
constexpr double kIndicatorFloor = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::int64_t cell_key(int kappa, int tau_a) {
  return (static_cast<std::int64_t>(kappa) << 32) | static_cast<std::uint32_t>(tau_a);
}
}  // namespace

DisaggInFlow DisaggInFlow::from_entries(std::vector<MuEntry> entries, double dt_s, double dx_m) {
  for (const MuEntry& e : entries) {
    if (e.mass < 0.0) throw ValidationError("mu entry with negative mass");
    if (e.tau_d < 0 || e.kappa < 0 || e.tau_a < 0)
      throw ValidationError("mu entry with a negative bin index");
  }
  std::sort(entries.begin(), entries.end(), [](const MuEntry& a, const MuEntry& b) {
    if (a.tau_d != b.tau_d) return a.tau_d < b.tau_d;
    if (a.kappa != b.kappa) return a.kappa < b.kappa;
    return a.tau_a < b.tau_a;
  });
  std::vector<MuEntry> merged;
  merged.reserve(entries.size());
  for (const MuEntry& e : entries) {
    if (e.mass == 0.0) continue;
    if (!merged.empty() && merged.back().tau_d == e.tau_d && merged.back().kappa == e.kappa &&
        merged.back().tau_a == e.tau_a)
      merged.back().mass += e.mass;
    else
      merged.push_back(e);
  }
  DisaggInFlow mu;
  mu.entries_ = std::move(merged);
  mu.dt_s_ = dt_s;
  mu.dx_m_ = dx_m;
  return mu;
}

double DisaggInFlow::total_mass() const {
  double s = 0.0;
  for (const MuEntry& e : entries_) s += e.mass;
  return s;
}

std::vector<InFlowEntry> DisaggInFlow::marginal_entries() const {
  std::vector<InFlowEntry> out;
  out.reserve(entries_.size());
  for (const MuEntry& e : entries_) {
    if (!out.empty() && out.back().tau_d == e.tau_d && out.back().kappa == e.kappa)
      out.back().mass += e.mass;
    else
      out.push_back({e.tau_d, e.kappa, e.mass});
  }
  return out;
}

InFlowGrid DisaggInFlow::marginal_p(const Grid& g) const {
  InFlowGrid p;
  p.dt_s = g.dt_s;
  p.dx_m = g.dx_m;
  p.n_t = g.n_t;
  p.n_k = g.n_k;
  p.p.assign(static_cast<std::size_t>(g.n_t) * g.n_k, 0.0);
  for (const MuEntry& e : entries_) {
    if (e.tau_d >= g.n_t || e.kappa >= g.n_k)
      throw ValidationError("mu entry outside the requested grid");
    p.at(e.tau_d, e.kappa) += e.mass;
  }
  return p;
}

std::vector<MuEntry> DisaggInFlow::arrival_marginal() const {
  std::vector<MuEntry> v(entries_.begin(), entries_.end());
  std::sort(v.begin(), v.end(), [](const MuEntry& a, const MuEntry& b) {
    if (a.tau_a != b.tau_a) return a.tau_a < b.tau_a;
    return a.kappa < b.kappa;
  });
  std::vector<MuEntry> out;
  for (const MuEntry& e : v) {
    if (!out.empty() && out.back().tau_a == e.tau_a && out.back().kappa == e.kappa) {
      out.back().mass += e.mass;
    } else {
      MuEntry m = e;
      m.tau_d = 0;  // marginalized out
      out.push_back(m);
    }
  }
  return out;
}

DisaggInFlow initial_solution(const DiscreteDemand& pi, const SpeedFunction& v,
                              int* clamped_cells) {
  pi.validate();
  std::vector<MuEntry> entries;
  int clamped = 0;
  for (int ta = 0; ta < pi.n_ta; ++ta) {
    for (int k = 0; k < pi.n_k; ++k) {
      double m = pi.at(ta, k);
      if (m == 0.0) continue;
      double depart_s = ta * pi.dt_s - bin_midpoint_m(k, pi.dx_m) / v.v_max();
      int td = static_cast<int>(std::floor(depart_s / pi.dt_s));
      if (td < 0) {
        td = 0;
        ++clamped;
      }
      entries.push_back({td, k, ta, m});
    }
  }
  if (clamped_cells) *clamped_cells = clamped;
  return DisaggInFlow::from_entries(std::move(entries), pi.dt_s, pi.dx_m);
}

DisaggInFlow demand_transfer(const std::function<int(int, int)>& decision,
                             const DiscreteDemand& pi) {
  std::vector<MuEntry> entries;
  for (int ta = 0; ta < pi.n_ta; ++ta) {
    for (int k = 0; k < pi.n_k; ++k) {
      double m = pi.at(ta, k);
      if (m == 0.0) continue;
      int td = decision(ta, k);
      if (td < 0) throw ValidationError("decision map returned a negative departure bin");
      entries.push_back({td, k, ta, m});
    }
  }
  return DisaggInFlow::from_entries(std::move(entries), pi.dt_s, pi.dx_m);
}

namespace {

struct CellBest {
  int tau_d = 0;
  double cost_norm = kInf;
};

// Exhaustive-result argmin over departure bins with an exact band prune: a seed
// candidate bounds the optimum from above, and any bin whose penalty-plus-minimal-
// travel lower bound strictly exceeds the running best can neither win nor tie, so
// skipping it cannot change the argmin or the earliest-bin tie-break.
template <typename PenFn>
CellBest scan_best(const std::vector<double>& arr, int ta, double dt, double min_travel,
                   double b, double g, const PenFn& pen) {
  const int n_t = static_cast<int>(arr.size());
  auto cost_at = [&](int td) { return (arr[td] - td * dt) + pen(arr[td], ta); };

  int seed = std::clamp(static_cast<int>(ta - min_travel / dt), 0, n_t - 1);
  while (seed > 0 && !std::isfinite(arr[seed])) --seed;
  if (!std::isfinite(arr[seed])) {
    // nothing up to the seed finishes; fall back to a plain scan
    CellBest cb;
    for (int td = 0; td < n_t; ++td) {
      if (!std::isfinite(arr[td])) continue;
      double c = cost_at(td);
      if (c < cb.cost_norm) {
        cb.cost_norm = c;
        cb.tau_d = td;
      }
    }
    return cb;
  }
  double bound = cost_at(seed);

  // earliest bin that could still beat `bound`: arrival at least
  // ta - (bound - min_travel)/(b*dt) bins, with a 2-bin safety margin
  int a_lo = ta - static_cast<int>((bound - min_travel) / (b * dt)) - 2;
  int start = 0;
  if (a_lo > 0) {
    auto it = std::lower_bound(arr.begin(), arr.end(), a_lo * dt);
    start = static_cast<int>(it - arr.begin());
  }

  CellBest cb;
  for (int td = start; td < n_t; ++td) {
    if (!std::isfinite(arr[td])) break;  // arrivals are monotone in the departure bin
    int abin = static_cast<int>(std::floor(arr[td] / dt));
    if (abin > ta && min_travel + g * (abin - ta) * dt > cb.cost_norm) break;
    double c = cost_at(td);
    if (c < cb.cost_norm) {
      cb.cost_norm = c;
      cb.tau_d = td;
    }
  }
  return cb;
}

// One full valuation of mu against a fixed zeta: per-entry normalized costs, per-cell
// best responses, the convergence indicator and the aggregate report statistics.
struct Evaluation {
  std::vector<double> entry_cost;  // normalized units
  std::unordered_map<std::int64_t, CellBest> best;
  double indicator = 0.0;
  double avg_cost_norm = 0.0;
  double mean_travel_time_s = 0.0;
  double residual_mass = 0.0;  // mass with alpha*(J - J_best) > epsilon
  bool overflow = false;
  double unfinished_mass = 0.0;
};

Evaluation evaluate(std::span<const MuEntry> entries, const CharacteristicDistance& zeta,
                    const SchedulingPrefs& prefs, double epsilon_norm) {
  const double dt = zeta.dt_s;
  const int n_t = zeta.n_t();
  const double b = prefs.beta_over_alpha();
  const double g = prefs.gamma_over_alpha();

  Evaluation ev;
  ev.entry_cost.assign(entries.size(), kInf);

  // fastest speed actually realized, for travel-time lower bounds in the band prune
  double max_inc = 0.0;
  for (int i = 0; i < n_t; ++i)
    max_inc = std::max(max_inc, zeta.zeta_m[i + 1] - zeta.zeta_m[i]);
  const double v_fast = max_inc / dt;

  // ordered so the sweep visits length bins deterministically
  std::map<int, std::vector<std::size_t>> by_kappa;
  for (std::size_t i = 0; i < entries.size(); ++i) by_kappa[entries[i].kappa].push_back(i);

  auto pen = [&](double arrival_s, int tau_a) {
    int abin = static_cast<int>(std::floor(arrival_s / dt));
    double dev = static_cast<double>(abin - tau_a) * dt;
    if (prefs.penalty == PenaltyShape::smooth_arctan)
      return smooth_arrival_penalty(dev, prefs) / prefs.alpha;
    return dev > 0.0 ? g * dev : (dev < 0.0 ? b * (-dev) : 0.0);
  };

  double total_mass = 0.0;
  for (auto& [kappa, idxs] : by_kappa) {
    std::vector<double> arr = arrival_times_for_kappa(zeta, kappa);

    // distinct desired-arrival bins sharing this length bin
    std::vector<int> tas;
    for (std::size_t i : idxs) tas.push_back(entries[i].tau_a);
    std::sort(tas.begin(), tas.end());
    tas.erase(std::unique(tas.begin(), tas.end()), tas.end());

    const double min_travel = bin_midpoint_m(kappa, zeta.dx_m) / v_fast;
    for (int ta : tas) {
      CellBest cb = scan_best(arr, ta, dt, min_travel, b, g, pen);
      if (!std::isfinite(cb.cost_norm)) ev.overflow = true;
      ev.best.emplace(cell_key(kappa, ta), cb);
    }

    for (std::size_t i : idxs) {
      const MuEntry& e = entries[i];
      total_mass += e.mass;
      if (!std::isfinite(arr[e.tau_d])) {
        ev.overflow = true;
        ev.unfinished_mass += e.mass;
        continue;
      }
      double travel = arr[e.tau_d] - e.tau_d * dt;
      double c = travel + pen(arr[e.tau_d], e.tau_a);
      ev.entry_cost[i] = c;
      ev.avg_cost_norm += e.mass * c;
      ev.mean_travel_time_s += e.mass * travel;
    }
  }
  if (ev.overflow) return ev;

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const MuEntry& e = entries[i];
    const CellBest& cb = ev.best.at(cell_key(e.kappa, e.tau_a));
    double gap = ev.entry_cost[i] - cb.cost_norm;
    ev.indicator += e.mass * gap / std::max(cb.cost_norm, kIndicatorFloor);
    if (gap > epsilon_norm) ev.residual_mass += e.mass;
  }
  if (total_mass > 0.0) {
    ev.avg_cost_norm /= total_mass;
    ev.mean_travel_time_s /= total_mass;
  }
  return ev;
}

}  // namespace

BestResponse best_response(const CharacteristicDistance& zeta, int kappa, int tau_a,
                           const SchedulingPrefs& prefs, std::pair<int, int> window) {
  if (window.first < 0 || window.second >= zeta.n_t() || window.first > window.second)
    throw RangeError("best_response window outside the grid");
  std::vector<double> arr = arrival_times_for_kappa(zeta, kappa);
  const double dt = zeta.dt_s;
  const double b = prefs.beta_over_alpha();
  const double g = prefs.gamma_over_alpha();
  BestResponse best{0, kInf};
  for (int td = window.first; td <= window.second; ++td) {
    if (!std::isfinite(arr[td])) continue;
    int abin = static_cast<int>(std::floor(arr[td] / dt));
    double dev = static_cast<double>(abin - tau_a) * dt;
    double pen;
    if (prefs.penalty == PenaltyShape::smooth_arctan)
      pen = smooth_arrival_penalty(dev, prefs) / prefs.alpha;
    else
      pen = dev > 0.0 ? g * dev : (dev < 0.0 ? b * (-dev) : 0.0);
    double c = (arr[td] - td * dt) + pen;
    if (c < best.cost) {
      best.cost = c;
      best.tau_d = td;
    }
  }
  if (!std::isfinite(best.cost))
    throw HorizonOverflowError("no departure bin in the window finishes inside the horizon");
  best.cost *= prefs.alpha;
  return best;
}

double convergence_indicator(const DisaggInFlow& mu, const CharacteristicDistance& zeta,
                             const SchedulingPrefs& prefs) {
  Evaluation ev = evaluate(mu.entries(), zeta, prefs, 0.0);
  if (ev.overflow)
    throw HorizonOverflowError("mu does not drain inside the horizon", ev.unfinished_mass);
  return ev.indicator;
}

double epsilon_mfe_check(const DisaggInFlow& mu, const CharacteristicDistance& zeta,
                         const SchedulingPrefs& prefs, double epsilon) {
  if (epsilon < 0.0) throw ValidationError("epsilon must be nonnegative");
  Evaluation ev = evaluate(mu.entries(), zeta, prefs, epsilon / prefs.alpha);
  if (ev.overflow)
    throw HorizonOverflowError("mu does not drain inside the horizon", ev.unfinished_mass);
  return ev.residual_mass;
}

namespace {

struct SolveEval {
  CharacteristicDistance zeta;
  Evaluation ev;
  SolveStats stats;
  double max_inflow_density = 0.0;
};

SolveEval solve_and_evaluate(const DisaggInFlow& mu, const SpeedFunction& v, Grid& g,
                             const SchedulingPrefs& prefs, double epsilon_norm) {
  const double cap_s = g.effective_cap_s();
  for (;;) {
    SolveEval se;
    std::vector<InFlowEntry> marginal = mu.marginal_entries();
    se.zeta = solve_characteristic(std::span<const InFlowEntry>(marginal), v, g, &se.stats);
    se.ev = evaluate(mu.entries(), se.zeta, prefs, epsilon_norm);
    if (!se.ev.overflow) {
      for (const InFlowEntry& e : marginal)
        se.max_inflow_density = std::max(se.max_inflow_density, e.mass / (g.dt_s * g.dx_m));
      return se;
    }
    if (static_cast<double>(g.n_t) * 2.0 * g.dt_s > cap_s)
      throw HorizonOverflowError(
          "demand does not drain within the horizon cap of " + std::to_string(cap_s) + " s",
          se.ev.unfinished_mass);
    g.n_t *= 2;
    g.horizon_s = g.n_t * g.dt_s;
  }
}

std::pair<DisaggInFlow, EquilibriumReport> run_solver(const DiscreteDemand& pi,
                                                      const SpeedFunction& v,
                                                      const SchedulingPrefs& prefs,
                                                      const Grid& grid, const SolverOptions& opts,
                                                      Selection selection) {
  prefs.validate();
  pi.validate();
  grid.validate(v);
  if (pi.dt_s != grid.dt_s || pi.dx_m != grid.dx_m)
    throw ConfigurationError("demand grid and solver grid use different bin sizes");
  if (pi.n_ta > grid.n_t) throw ConfigurationError("horizon does not cover the demand arrivals");
  if (pi.n_k > grid.n_k) throw ConfigurationError("grid does not cover the demand lengths");
  if (opts.max_iter < 1) throw ValidationError("max_iter must be at least 1");
  if (!(opts.tol > 0.0)) throw ValidationError("tol must be positive");
  if (opts.epsilon < 0.0) throw ValidationError("epsilon must be nonnegative");

  const double epsilon_norm = opts.epsilon / prefs.alpha;
  const double total = pi.total_mass();
  Grid g = grid;
  std::mt19937_64 rng(opts.seed);

  EquilibriumReport rep;
  DisaggInFlow mu = initial_solution(pi, v, &rep.clamped_initial_cells);

  SolveEval se = solve_and_evaluate(mu, v, g, prefs, epsilon_norm);
  rep.initial_indicator = se.ev.indicator;
  rep.initial_peak_accumulation = se.stats.max_mass;

  for (int k = 1; k <= opts.max_iter; ++k) {
    std::span<const MuEntry> entries = mu.entries();
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    if (selection == Selection::cost_sorted) {
      // rank by the avoidable part of the cost. Ranking by the raw cost would let
      // long trips that are already at their best response saturate the quota and
      // starve every cell that still has something to gain.
      std::vector<double> gap(entries.size());
      for (std::size_t i = 0; i < entries.size(); ++i)
        gap[i] = se.ev.entry_cost[i] -
                 se.ev.best.at(cell_key(entries[i].kappa, entries[i].tau_a)).cost_norm;
      std::sort(order.begin(), order.end(), [&gap](std::size_t a, std::size_t b) {
        if (gap[a] != gap[b]) return gap[a] > gap[b];
        return a < b;  // canonical entry order resolves ties
      });
    } else {
      deterministic_shuffle(order, rng);
    }

    // take cells off the top until 1/k of the mass is selected; the boundary
    // cell is split so the quota is exact
    const double quota = total / static_cast<double>(k);
    std::vector<double> moved(entries.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i : order) {
      double room = quota - acc;
      if (room <= 0.0) break;
      double take = std::min(entries[i].mass, room);
      moved[i] = take;
      acc += take;
    }

    std::vector<MuEntry> next;
    next.reserve(entries.size() + 8);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const MuEntry& e = entries[i];
      if (moved[i] > 0.0) {
        const CellBest& cb = se.ev.best.at(cell_key(e.kappa, e.tau_a));
        next.push_back({cb.tau_d, e.kappa, e.tau_a, moved[i]});
        if (moved[i] < e.mass) next.push_back({e.tau_d, e.kappa, e.tau_a, e.mass - moved[i]});
      } else {
        next.push_back(e);
      }
    }
    mu = DisaggInFlow::from_entries(std::move(next), pi.dt_s, pi.dx_m);

    se = solve_and_evaluate(mu, v, g, prefs, epsilon_norm);
    rep.indicator_history.push_back(se.ev.indicator);
    rep.peak_accumulation_history.push_back(se.stats.max_mass);
    rep.max_inflow_density_history.push_back(se.max_inflow_density);
    rep.clamped_speed_evals += se.stats.clamped_evals;
    if (se.ev.indicator < opts.tol) {
      rep.converged = true;
      break;
    }
  }

  rep.iterations = static_cast<int>(rep.indicator_history.size());
  rep.final_indicator = rep.indicator_history.back();
  rep.avg_cost = prefs.alpha * se.ev.avg_cost_norm;
  rep.total_travel_time_s = se.ev.mean_travel_time_s * opts.trip_count;
  rep.epsilon_residual_mass = se.ev.residual_mass;
  rep.horizon_s_used = g.horizon_s;
  rep.n_t_used = g.n_t;
  return {std::move(mu), std::move(rep)};
}

}  // namespace

std::pair<DisaggInFlow, EquilibriumReport> heuristic_solve(const DiscreteDemand& pi,
                                                           const SpeedFunction& v,
                                                           const SchedulingPrefs& prefs,
                                                           const Grid& g,
                                                           const SolverOptions& opts) {
  return run_solver(pi, v, prefs, g, opts, opts.selection);
}

CharacteristicDistance solve_for(const DisaggInFlow& mu, const SpeedFunction& v, const Grid& grid) {
  Grid g = grid;
  const double cap_s = g.effective_cap_s();
  for (;;) {
    std::vector<InFlowEntry> marginal = mu.marginal_entries();
    CharacteristicDistance zeta =
        solve_characteristic(std::span<const InFlowEntry>(marginal), v, g);
    bool drained = true;
    for (const InFlowEntry& e : marginal) {
      if (!std::isfinite(arrival_time_of(zeta, e.tau_d, e.kappa))) {
        drained = false;
        break;
      }
    }
    if (drained) return zeta;
    if (static_cast<double>(g.n_t) * 2.0 * g.dt_s > cap_s)
      throw HorizonOverflowError("demand does not drain within the horizon cap");
    g.n_t *= 2;
    g.horizon_s = g.n_t * g.dt_s;
  }
}

// internal hook for the MSA baseline; kept out of the public header
std::pair<DisaggInFlow, EquilibriumReport> run_solver_with_selection(
    const DiscreteDemand& pi, const SpeedFunction& v, const SchedulingPrefs& prefs, const Grid& g,
    const SolverOptions& opts, Selection selection) {
  return run_solver(pi, v, prefs, g, opts, selection);
}

}  // namespace dtue
