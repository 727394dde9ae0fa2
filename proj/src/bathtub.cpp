#include "dtue/bathtub.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "dtue/errors.hpp"

namespace dtue {

namespace {
constexpr double kConservationTol = 1e-9;
}

SpeedFunction SpeedFunction::greenshields(double v_max_mps, double v_min_mps,
                                          double capacity_mass) {
  // equality gives a constant (uncongested) speed function
  if (!(v_max_mps >= v_min_mps && v_min_mps > 0.0))
    throw ValidationError("speed function requires v_max >= v_min > 0");
  if (!(capacity_mass > 0.0)) throw ValidationError("capacity mass must be positive");
  SpeedFunction f;
  f.kind_ = SpeedKind::greenshields_linear;
  f.v_max_ = v_max_mps;
  f.v_min_ = v_min_mps;
  f.capacity_ = capacity_mass;
  return f;
}

SpeedFunction SpeedFunction::quadratic(double v_max_mps, double v_min_mps, double capacity_mass) {
  SpeedFunction f = greenshields(v_max_mps, v_min_mps, capacity_mass);
  f.kind_ = SpeedKind::quadratic;
  return f;
}

SpeedFunction SpeedFunction::from_table(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw ValidationError("speed table needs at least two points");
  if (points.front().first != 0.0) throw ValidationError("speed table must start at mass 0");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].second > 0.0)) throw ValidationError("table speeds must be positive");
    if (i > 0) {
      if (!(points[i].first > points[i - 1].first))
        throw ValidationError("table masses must be strictly increasing");
      if (points[i].second > points[i - 1].second)
        throw ValidationError("table speeds must be nonincreasing");
    }
  }
  SpeedFunction f;
  f.kind_ = SpeedKind::table;
  f.v_max_ = points.front().second;
  f.v_min_ = points.back().second;
  f.capacity_ = points.back().first;
  f.table_ = std::move(points);
  return f;
}

double SpeedFunction::operator()(double mass) const {
  double c = std::clamp(mass, 0.0, 1.0);
  double v;
  switch (kind_) {
    case SpeedKind::greenshields_linear: {
      double r = std::min(c / capacity_, 1.0);
      v = v_max_ - (v_max_ - v_min_) * r;
      break;
    }
    case SpeedKind::quadratic: {
      double r = std::min(c / capacity_, 1.0);
      v = v_min_ + (v_max_ - v_min_) * (1.0 - r) * (1.0 - r);
      break;
    }
    case SpeedKind::table: {
      if (c <= table_.front().first) {
        v = table_.front().second;
      } else if (c >= table_.back().first) {
        v = table_.back().second;
      } else {
        std::size_t j = 1;
        while (table_[j].first < c) ++j;
        const auto& [m0, v0] = table_[j - 1];
        const auto& [m1, v1] = table_[j];
        v = v0 + (v1 - v0) * (c - m0) / (m1 - m0);
      }
      break;
    }
    default:
      v = v_min_;
  }
  return std::clamp(v, v_min_, v_max_);
}

double SpeedFunction::lipschitz() const {
  switch (kind_) {
    case SpeedKind::greenshields_linear:
      return (v_max_ - v_min_) / capacity_;
    case SpeedKind::quadratic:
      return 2.0 * (v_max_ - v_min_) / capacity_;
    case SpeedKind::table: {
      double worst = 0.0;
      for (std::size_t i = 1; i < table_.size(); ++i) {
        double dm = table_[i].first - table_[i - 1].first;
        double dv = table_[i - 1].second - table_[i].second;
        worst = std::max(worst, dv / dm);
      }
      return worst;
    }
  }
  return 0.0;
}

void Grid::validate(const SpeedFunction& v) const {
  if (!(dt_s > 0.0) || !(dx_m > 0.0)) throw ConfigurationError("grid dt and dx must be positive");
  if (n_t <= 0 || n_k <= 0) throw ConfigurationError("grid extents must be positive");
  if (dx_m < v.v_max() * dt_s)
    throw ConfigurationError("CFL-style condition violated: dx must be >= v_max*dt (dx=" +
                             std::to_string(dx_m) + ", v_max*dt=" +
                             std::to_string(v.v_max() * dt_s) + ")");
  if (static_cast<double>(n_t) * dt_s < horizon_s)
    throw ConfigurationError("n_t*dt does not cover the horizon");
}

void CharacteristicDistance::validate(const SpeedFunction& v) const {
  if (zeta_m.empty() || zeta_m.front() != 0.0)
    throw ValidationError("characteristic distance must start at 0");
  const double lo = v.v_min() * dt_s * (1.0 - 1e-9);
  const double hi = v.v_max() * dt_s * (1.0 + 1e-9);
  for (std::size_t i = 1; i < zeta_m.size(); ++i) {
    double inc = zeta_m[i] - zeta_m[i - 1];
    if (!(inc > 0.0)) throw ValidationError("characteristic distance must be strictly increasing");
    if (inc < lo || inc > hi)
      throw ValidationError("characteristic-distance increment outside [v_min*dt, v_max*dt]");
  }
}

double InFlowGrid::total_mass() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

std::vector<InFlowEntry> InFlowGrid::entries() const {
  std::vector<InFlowEntry> out;
  for (int t = 0; t < n_t; ++t)
    for (int k = 0; k < n_k; ++k)
      if (double m = at(t, k); m != 0.0) out.push_back({t, k, m});
  return out;
}

void InFlowGrid::validate_against(const DiscreteDemand& pi) const {
  if (pi.n_k > n_k) throw ValidationError("in-flow grid narrower than the demand grid");
  for (int k = 0; k < n_k; ++k) {
    double p_col = 0.0;
    for (int t = 0; t < n_t; ++t) p_col += at(t, k);
    double pi_col = 0.0;
    if (k < pi.n_k)
      for (int a = 0; a < pi.n_ta; ++a) pi_col += pi.at(a, k);
    if (std::abs(p_col - pi_col) > 1e-12)
      throw ValidationError("departure marginal deviates from demand at length bin " +
                            std::to_string(k));
  }
}

double NetworkSeries::peak_accumulation() const {
  double m = 0.0;
  for (double c : accumulation) m = std::max(m, c);
  return m;
}

double active_mass(const CharacteristicDistance& zeta, const InFlowGrid& p, int theta) {
  if (theta < 0 || theta >= p.n_t || theta >= zeta.n_t())
    throw RangeError("active_mass: time bin " + std::to_string(theta) + " beyond the grid");
  double sum = 0.0;
  for (int td = 0; td <= theta; ++td) {
    double travelled = zeta.zeta_m[theta] - zeta.zeta_m[td];
    for (int k = 0; k < p.n_k; ++k) {
      double m = p.at(td, k);
      if (m != 0.0 && bin_midpoint_m(k, p.dx_m) > travelled) sum += m;
    }
  }
  return sum;
}

namespace {

// exit-distance heap: a trip departing at tau_d with length l leaves the system
// once zeta(theta) reaches zeta(tau_d) + l
using ExitHeap =
    std::priority_queue<std::pair<double, double>, std::vector<std::pair<double, double>>,
                        std::greater<>>;

}  // namespace

CharacteristicDistance solve_characteristic(std::span<const InFlowEntry> entries,
                                            const SpeedFunction& v, const Grid& g,
                                            SolveStats* stats) {
  g.validate(v);
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].tau_d < entries[i - 1].tau_d)
      throw ValidationError("in-flow entries must be sorted by departure bin");
  if (!entries.empty() && (entries.front().tau_d < 0 || entries.back().tau_d >= g.n_t))
    throw ValidationError("in-flow entry departs outside the grid");

  CharacteristicDistance zeta;
  zeta.dt_s = g.dt_s;
  zeta.dx_m = g.dx_m;
  zeta.zeta_m.assign(static_cast<std::size_t>(g.n_t) + 1, 0.0);

  ExitHeap heap;
  std::size_t next = 0;
  double entered = 0.0, exited = 0.0;
  for (int theta = 0; theta < g.n_t; ++theta) {
    const double z = zeta.zeta_m[theta];
    while (next < entries.size() && entries[next].tau_d == theta) {
      entered += entries[next].mass;
      heap.emplace(z + bin_midpoint_m(entries[next].kappa, g.dx_m), entries[next].mass);
      ++next;
    }
    while (!heap.empty() && heap.top().first <= z) {
      exited += heap.top().second;
      heap.pop();
    }
    double c = std::max(entered - exited, 0.0);
    if (stats) {
      stats->max_mass = std::max(stats->max_mass, c);
      if (c > 1.0) ++stats->clamped_evals;
    }
    zeta.zeta_m[theta + 1] = z + v(c) * g.dt_s;
  }
  return zeta;
}

CharacteristicDistance solve_characteristic(const InFlowGrid& p, const SpeedFunction& v,
                                            const Grid& g, SolveStats* stats) {
  return solve_characteristic(std::span<const InFlowEntry>(p.entries()), v, g, stats);
}

CharacteristicDistance picard_operator(const CharacteristicDistance& zeta_in,
                                       std::span<const InFlowEntry> entries,
                                       const SpeedFunction& v, const Grid& g) {
  g.validate(v);
  if (static_cast<int>(zeta_in.zeta_m.size()) < g.n_t + 1)
    throw ValidationError("picard_operator input must cover the full grid");

  // active mass at each theta under the *fixed* input path
  std::vector<double> c(static_cast<std::size_t>(g.n_t), 0.0);
  bool monotone = true;
  for (int i = 1; i <= g.n_t && monotone; ++i)
    monotone = zeta_in.zeta_m[i] > zeta_in.zeta_m[i - 1];

  if (monotone) {
    ExitHeap heap;
    std::size_t next = 0;
    double entered = 0.0, exited = 0.0;
    for (int theta = 0; theta < g.n_t; ++theta) {
      const double z = zeta_in.zeta_m[theta];
      while (next < entries.size() && entries[next].tau_d == theta) {
        entered += entries[next].mass;
        heap.emplace(zeta_in.zeta_m[entries[next].tau_d] +
                         bin_midpoint_m(entries[next].kappa, g.dx_m),
                     entries[next].mass);
        ++next;
      }
      while (!heap.empty() && heap.top().first <= z) {
        exited += heap.top().second;
        heap.pop();
      }
      c[theta] = std::max(entered - exited, 0.0);
    }
  } else {
    // arbitrary start (e.g. zeta == 0): membership is not monotone, sum directly
    for (int theta = 0; theta < g.n_t; ++theta) {
      double sum = 0.0;
      for (const InFlowEntry& e : entries) {
        if (e.tau_d > theta) break;
        if (bin_midpoint_m(e.kappa, g.dx_m) > zeta_in.zeta_m[theta] - zeta_in.zeta_m[e.tau_d])
          sum += e.mass;
      }
      c[theta] = sum;
    }
  }

  CharacteristicDistance out;
  out.dt_s = g.dt_s;
  out.dx_m = g.dx_m;
  out.zeta_m.assign(static_cast<std::size_t>(g.n_t) + 1, 0.0);
  for (int theta = 0; theta < g.n_t; ++theta)
    out.zeta_m[theta + 1] = out.zeta_m[theta] + v(c[theta]) * g.dt_s;
  return out;
}

CharacteristicDistance picard_operator(const CharacteristicDistance& zeta_in, const InFlowGrid& p,
                                       const SpeedFunction& v, const Grid& g) {
  return picard_operator(zeta_in, std::span<const InFlowEntry>(p.entries()), v, g);
}

namespace {

inline double interp_time(const std::vector<double>& z, std::size_t j, double d, double dt) {
  // z[j] <= d <= z[j+1]
  return (static_cast<double>(j) + (d - z[j]) / (z[j + 1] - z[j])) * dt;
}

}  // namespace

double invert_distance(const CharacteristicDistance& zeta, double d_m) {
  const auto& z = zeta.zeta_m;
  if (d_m < 0.0) throw RangeError("invert_distance: negative distance");
  if (d_m > z.back())
    throw HorizonOverflowError("invert_distance: distance " + std::to_string(d_m) +
                               " beyond zeta(T)=" + std::to_string(z.back()));
  auto it = std::lower_bound(z.begin(), z.end(), d_m);
  std::size_t idx = static_cast<std::size_t>(it - z.begin());
  if (it != z.end() && *it == d_m) return static_cast<double>(idx) * zeta.dt_s;
  return interp_time(z, idx - 1, d_m, zeta.dt_s);
}

double arrival_time_of(const CharacteristicDistance& zeta, int tau_d, int kappa) {
  if (tau_d < 0 || tau_d >= zeta.n_t())
    throw RangeError("departure bin " + std::to_string(tau_d) + " outside the grid");
  double target = zeta.zeta_m[tau_d] + bin_midpoint_m(kappa, zeta.dx_m);
  if (target > zeta.zeta_m.back()) return std::numeric_limits<double>::infinity();
  return invert_distance(zeta, target);
}

double travel_time_of(const CharacteristicDistance& zeta, int tau_d, int kappa) {
  double arr = arrival_time_of(zeta, tau_d, kappa);
  if (!std::isfinite(arr))
    throw HorizonOverflowError("trip (tau_d=" + std::to_string(tau_d) + ", kappa=" +
                               std::to_string(kappa) + ") does not finish inside the horizon");
  return arr - tau_d * zeta.dt_s;
}

std::vector<double> arrival_times_for_kappa(const CharacteristicDistance& zeta, int kappa) {
  const auto& z = zeta.zeta_m;
  const int n_t = zeta.n_t();
  const double len = bin_midpoint_m(kappa, zeta.dx_m);
  std::vector<double> arr(static_cast<std::size_t>(n_t),
                          std::numeric_limits<double>::infinity());
  std::size_t j = 0;
  for (int td = 0; td < n_t; ++td) {
    double target = z[td] + len;
    if (target > z.back()) break;  // targets only grow with tau_d
    if (j < static_cast<std::size_t>(td)) j = static_cast<std::size_t>(td);
    while (z[j + 1] < target) ++j;
    if (z[j] == target)
      arr[td] = static_cast<double>(j) * zeta.dt_s;
    else if (z[j + 1] == target)
      arr[td] = static_cast<double>(j + 1) * zeta.dt_s;
    else
      arr[td] = interp_time(z, j, target, zeta.dt_s);
  }
  return arr;
}

NetworkSeries network_series(const CharacteristicDistance& zeta,
                             std::span<const InFlowEntry> entries, const SpeedFunction& v,
                             int n_k, bool with_remaining_dist) {
  const int n_t = zeta.n_t();
  NetworkSeries s;
  s.dt_s = zeta.dt_s;
  s.n_k = n_k;
  s.accumulation.assign(static_cast<std::size_t>(n_t), 0.0);
  s.speed_mps.assign(static_cast<std::size_t>(n_t), 0.0);
  s.cum_inflow.assign(static_cast<std::size_t>(n_t), 0.0);
  s.cum_outflow.assign(static_cast<std::size_t>(n_t), 0.0);
  if (with_remaining_dist)
    s.remaining_dist.assign(static_cast<std::size_t>(n_t) * n_k, 0.0);

  ExitHeap heap;
  std::vector<std::pair<double, double>> active;  // (exit distance, mass), for Phi only
  std::size_t next = 0;
  double entered = 0.0, exited = 0.0;
  for (int theta = 0; theta < n_t; ++theta) {
    const double z = zeta.zeta_m[theta];
    while (next < entries.size() && entries[next].tau_d == theta) {
      double exit_at = z + bin_midpoint_m(entries[next].kappa, zeta.dx_m);
      entered += entries[next].mass;
      heap.emplace(exit_at, entries[next].mass);
      if (with_remaining_dist) active.emplace_back(exit_at, entries[next].mass);
      ++next;
    }
    while (!heap.empty() && heap.top().first <= z) {
      exited += heap.top().second;
      heap.pop();
    }
    double c = std::max(entered - exited, 0.0);
    s.accumulation[theta] = c;
    s.speed_mps[theta] = v(c);
    s.cum_inflow[theta] = entered;
    s.cum_outflow[theta] = entered - c;

    if (with_remaining_dist) {
      std::erase_if(active, [z](const auto& a) { return a.first <= z; });
      // histogram of remaining lengths, then suffix sums: Phi(theta, k) = mass with remaining > k*dx
      std::vector<double> hist(static_cast<std::size_t>(n_k) + 1, 0.0);
      for (const auto& [exit_at, m] : active) {
        double remaining = exit_at - z;
        int k = std::min(static_cast<int>(remaining / zeta.dx_m), n_k - 1);
        hist[static_cast<std::size_t>(k)] += m;
      }
      double suffix = 0.0;
      for (int k = n_k - 1; k >= 0; --k) {
        suffix += hist[static_cast<std::size_t>(k)];
        s.remaining_dist[static_cast<std::size_t>(theta) * n_k + k] = suffix;
      }
    }
  }
  (void)kConservationTol;
  return s;
}

NetworkSeries network_series(const CharacteristicDistance& zeta, const InFlowGrid& p,
                             const SpeedFunction& v, bool with_remaining_dist) {
  return network_series(zeta, std::span<const InFlowEntry>(p.entries()), v, p.n_k,
                        with_remaining_dist);
}

}  // namespace dtue
