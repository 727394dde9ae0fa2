#include "dtue/demand.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtue/errors.hpp"
#include "dtue/io.hpp"
#include "dtue/rng.hpp"

namespace dtue {

namespace {
constexpr double kShareTol = 1e-9;
constexpr double kMassTol = 1e-12;     // relative
constexpr double kLengthFloorM = 1e-3; // truncation floor for sampled lengths
}  // namespace

void TripClass::validate() const {
  if (!(share >= 0.0 && share <= 1.0)) throw ValidationError("class share must be in [0,1]");
  if (!(mean_trip_length_m > 0.0)) throw ValidationError("mean trip length must be positive");
  if (trip_length_spread_m < 0.0) throw ValidationError("trip length spread must be nonnegative");
  if (!(arrival_window_start_s < arrival_window_end_s))
    throw ValidationError("arrival window start must precede its end");
  if (desired_arrival_s < arrival_window_start_s || desired_arrival_s > arrival_window_end_s)
    throw ValidationError("desired arrival must lie inside the arrival window");
  if (arrival_jitter_s < 0.0) throw ValidationError("arrival jitter must be nonnegative");
}

DemandProfile DemandProfile::from_trips(std::vector<Trip> trips) {
  DemandProfile p;
  p.trips = std::move(trips);
  if (p.trips.empty()) throw ValidationError("demand profile has no trips");
  p.x_min_m = p.x_max_m = p.trips.front().length_m;
  p.t_a_min_s = p.t_a_max_s = p.trips.front().desired_arrival_s;
  for (const Trip& t : p.trips) {
    p.x_min_m = std::min(p.x_min_m, t.length_m);
    p.x_max_m = std::max(p.x_max_m, t.length_m);
    p.t_a_min_s = std::min(p.t_a_min_s, t.desired_arrival_s);
    p.t_a_max_s = std::max(p.t_a_max_s, t.desired_arrival_s);
  }
  p.validate();
  return p;
}

void DemandProfile::validate() const {
  if (trips.empty()) throw ValidationError("demand profile has no trips");
  if (!(x_min_m > 0.0)) throw ValidationError("trip lengths must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < trips.size(); ++i) {
    const Trip& t = trips[i];
    if (t.weight < 0.0)
      throw ValidationError("trip " + std::to_string(i) + " has negative weight");
    if (t.length_m < x_min_m || t.length_m > x_max_m)
      throw ValidationError("trip " + std::to_string(i) + " outside the length bounds");
    if (t.desired_arrival_s < t_a_min_s || t.desired_arrival_s > t_a_max_s)
      throw ValidationError("trip " + std::to_string(i) + " outside the arrival bounds");
    sum += t.weight;
  }
  if (std::abs(sum - 1.0) > kMassTol * std::max(1.0, std::abs(sum)))
    throw ValidationError("trip weights sum to " + std::to_string(sum) + ", expected 1");
}

double DemandProfile::total_weight() const {
  double s = 0.0;
  for (const Trip& t : trips) s += t.weight;
  return s;
}

double DiscreteDemand::total_mass() const {
  double s = 0.0;
  for (double v : pi) s += v;
  return s;
}

double DiscreteDemand::regularity_max() const {
  double worst = 0.0;
  for (int k = 0; k < n_k; ++k) {
    double col = 0.0;
    for (int a = 0; a < n_ta; ++a) col += at(a, k);
    worst = std::max(worst, col / dx_m);
  }
  return worst;
}

void DiscreteDemand::validate() const {
  if (n_ta <= 0 || n_k <= 0 || dt_s <= 0.0 || dx_m <= 0.0)
    throw ValidationError("discrete demand has an empty or degenerate grid");
  for (double v : pi)
    if (v < 0.0) throw ValidationError("discrete demand has a negative cell");
  double s = total_mass();
  if (std::abs(s - 1.0) > kMassTol * std::max(1.0, std::abs(s)))
    throw ValidationError("discrete demand mass is " + std::to_string(s) + ", expected 1");
}

DemandProfile synthesize_demand(const std::vector<TripClass>& classes, int total_trips,
                                std::uint64_t seed) {
  if (classes.empty()) throw ValidationError("no trip classes given");
  double share_sum = 0.0;
  for (const TripClass& c : classes) {
    c.validate();
    share_sum += c.share;
  }
  if (std::abs(share_sum - 1.0) > kShareTol)
    throw ValidationError("class shares sum to " + std::to_string(share_sum) + ", expected 1");
  if (total_trips < static_cast<int>(classes.size()))
    throw ValidationError("total_trips must be at least the number of classes");

  std::vector<int> counts(classes.size());
  long n = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    counts[i] = static_cast<int>(std::llround(classes[i].share * total_trips));
    n += counts[i];
  }
  if (n <= 0) throw ValidationError("rounded class counts are all zero");

  // Weights are 1/n for the n trips actually generated, so the profile mass is 1
  // even when the per-class rounding does not add up to total_trips exactly.
  const double w = 1.0 / static_cast<double>(n);
  std::mt19937_64 eng(seed);
  std::vector<Trip> trips;
  trips.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const TripClass& c = classes[i];
    for (int j = 0; j < counts[i]; ++j) {
      Trip t;
      double u = uniform01(eng);
      t.length_m = c.mean_trip_length_m + (2.0 * u - 1.0) * c.trip_length_spread_m;
      t.length_m = std::max(t.length_m, kLengthFloorM);
      t.desired_arrival_s = c.desired_arrival_s;
      if (c.arrival_jitter_s > 0.0)
        t.desired_arrival_s += (2.0 * uniform01(eng) - 1.0) * c.arrival_jitter_s;
      t.weight = w;
      t.class_id = static_cast<int>(i);
      trips.push_back(t);
    }
  }
  return DemandProfile::from_trips(std::move(trips));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double_field(const std::string& s, const char* what, long line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("cannot parse ") + what + " from '" + s + "'", line);
  }
}

}  // namespace

DemandProfile load_demand_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open demand file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("demand file " + path.string() + " is empty");

  auto header = split_csv_line(line);
  int col_len = -1, col_ta = -1, col_w = -1, col_cls = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "length_m") col_len = static_cast<int>(i);
    else if (header[i] == "desired_arrival_s") col_ta = static_cast<int>(i);
    else if (header[i] == "weight") col_w = static_cast<int>(i);
    else if (header[i] == "class_id") col_cls = static_cast<int>(i);
    else throw ParseError("unknown demand column '" + header[i] + "'", 1);
  }
  if (col_len < 0 || col_ta < 0)
    throw ParseError("demand header must contain length_m and desired_arrival_s", 1);

  std::vector<Trip> trips;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != static_cast<int>(header.size()))
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(f.size()),
                       line_no);
    Trip t;
    t.length_m = parse_double_field(f[col_len], "length_m", line_no);
    t.desired_arrival_s = parse_double_field(f[col_ta], "desired_arrival_s", line_no);
    if (t.length_m <= 0.0)
      throw ValidationError("row " + std::to_string(line_no) + ": length_m must be positive");
    if (col_w >= 0) t.weight = parse_double_field(f[col_w], "weight", line_no);
    if (col_cls >= 0)
      t.class_id = static_cast<int>(parse_double_field(f[col_cls], "class_id", line_no));
    trips.push_back(t);
  }
  if (trips.empty()) throw ValidationError("demand file " + path.string() + " has no rows");

  if (col_w < 0) {
    const double w = 1.0 / static_cast<double>(trips.size());
    for (Trip& t : trips) t.weight = w;
  } else {
    double sum = 0.0;
    for (const Trip& t : trips) sum += t.weight;
    if (!(sum > 0.0)) throw ValidationError("demand weights must have a positive sum");
    // renormalize only when off, so an already-normalized file round-trips bit-exactly
    if (std::abs(sum - 1.0) > kMassTol)
      for (Trip& t : trips) t.weight /= sum;
  }
  return DemandProfile::from_trips(std::move(trips));
}

void write_demand_csv(const DemandProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "length_m,desired_arrival_s,weight,class_id\n";
  for (const Trip& t : profile.trips)
    out << format_double(t.length_m) << ',' << format_double(t.desired_arrival_s) << ','
        << format_double(t.weight) << ',' << t.class_id << '\n';
}

DiscreteDemand discretize_demand(const DemandProfile& profile, double dt_s, double dx_m) {
  if (!(dt_s > 0.0) || !(dx_m > 0.0)) throw ValidationError("dt and dx must be positive");
  profile.validate();

  if (profile.t_a_min_s < 0.0)
    throw ValidationError("demand grid starts at t=0; negative desired arrivals do not fit");

  DiscreteDemand d;
  d.dt_s = dt_s;
  d.dx_m = dx_m;
  d.n_ta = static_cast<int>(std::floor(profile.t_a_max_s / dt_s)) + 1;
  d.n_k = static_cast<int>(std::floor(profile.x_max_m / dx_m)) + 1;
  d.pi.assign(static_cast<std::size_t>(d.n_ta) * d.n_k, 0.0);

  // Accumulate in (cell, weight) order so the grid is bit-identical for any
  // permutation of the trip list.
  std::vector<std::pair<std::size_t, double>> cells;
  cells.reserve(profile.trips.size());
  for (std::size_t i = 0; i < profile.trips.size(); ++i) {
    const Trip& t = profile.trips[i];
    if (t.desired_arrival_s < 0.0)
      throw ValidationError("trip " + std::to_string(i) + " has a negative desired arrival");
    int ta = static_cast<int>(std::floor(t.desired_arrival_s / dt_s));
    int k = static_cast<int>(std::floor(t.length_m / dx_m));
    if (ta < 0 || ta >= d.n_ta || k < 0 || k >= d.n_k)
      throw ValidationError("trip " + std::to_string(i) + " falls outside the demand grid");
    cells.emplace_back(static_cast<std::size_t>(ta) * d.n_k + k, t.weight);
  }
  std::sort(cells.begin(), cells.end());
  for (const auto& [idx, w] : cells) d.pi[idx] += w;
  d.validate();
  return d;
}

}  // namespace dtue
