#include "dtue/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dtue/errors.hpp"
#include "dtue/io.hpp"

namespace dtue {

namespace {

struct KeyValue {
  std::string section;
  std::string key;
  std::string value;
  long line;
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<KeyValue> parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file " + path.string());
  std::vector<KeyValue> out;
  std::string line, section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    KeyValue kv;
    kv.section = section;
    kv.key = trim(line.substr(0, eq));
    kv.value = trim(line.substr(eq + 1));
    kv.line = line_no;
    if (kv.section.empty()) throw ParseError("key outside any [section]", line_no);
    if (kv.key.empty() || kv.value.empty()) throw ParseError("empty key or value", line_no);
    out.push_back(std::move(kv));
  }
  return out;
}

double as_double(const KeyValue& kv) {
  try {
    return std::stod(kv.value);
  } catch (const std::exception&) {
    throw ParseError("cannot parse number '" + kv.value + "' for " + kv.key, kv.line);
  }
}

long as_long(const KeyValue& kv) {
  try {
    return std::stol(kv.value);
  } catch (const std::exception&) {
    throw ParseError("cannot parse integer '" + kv.value + "' for " + kv.key, kv.line);
  }
}

std::vector<double> as_numbers(const KeyValue& kv, std::size_t n_min, std::size_t n_max = 0) {
  if (n_max == 0) n_max = n_min;
  std::stringstream ss(kv.value);
  std::vector<double> out;
  double v;
  while (ss >> v) out.push_back(v);
  if (out.size() < n_min || out.size() > n_max)
    throw ParseError(kv.key + " needs " + std::to_string(n_min) + " numbers", kv.line);
  return out;
}

}  // namespace

Scenario Scenario::load(const std::filesystem::path& path) {
  Scenario sc;
  std::string speed_kind = "greenshields_linear";
  double v_max = 0.0, v_min = 0.0, capacity = 1.0;
  std::vector<std::pair<double, double>> table;
  bool have_prefs_k = false;
  double prefs_k = 0.0;

  for (const KeyValue& kv : parse_config(path)) {
    if (kv.section == "demand") {
      if (kv.key == "class") {
        auto f = as_numbers(kv, 6, 7);  // optional 7th number: arrival jitter
        TripClass c;
        c.share = f[0];
        c.mean_trip_length_m = f[1];
        c.trip_length_spread_m = f[2];
        c.desired_arrival_s = f[3];
        c.arrival_window_start_s = f[4];
        c.arrival_window_end_s = f[5];
        if (f.size() == 7) c.arrival_jitter_s = f[6];
        sc.classes.push_back(c);
      } else if (kv.key == "csv_path") {
        sc.demand_csv = path.parent_path() / kv.value;
      } else if (kv.key == "total_trips") {
        sc.total_trips = static_cast<int>(as_long(kv));
      } else if (kv.key == "seed") {
        sc.demand_seed = static_cast<std::uint64_t>(as_long(kv));
      } else {
        throw ParseError("unknown demand key '" + kv.key + "'", kv.line);
      }
    } else if (kv.section == "speed") {
      if (kv.key == "kind") speed_kind = kv.value;
      else if (kv.key == "v_max_mps") v_max = as_double(kv);
      else if (kv.key == "v_min_mps") v_min = as_double(kv);
      else if (kv.key == "capacity_mass") capacity = as_double(kv);
      else if (kv.key == "point") {
        auto f = as_numbers(kv, 2);
        table.emplace_back(f[0], f[1]);
      } else throw ParseError("unknown speed key '" + kv.key + "'", kv.line);
    } else if (kv.section == "prefs") {
      if (kv.key == "alpha") sc.prefs.alpha = as_double(kv);
      else if (kv.key == "beta") sc.prefs.beta = as_double(kv);
      else if (kv.key == "gamma") sc.prefs.gamma = as_double(kv);
      else if (kv.key == "k") { have_prefs_k = true; prefs_k = as_double(kv); }
      else if (kv.key == "penalty") {
        if (kv.value == "piecewise_linear") sc.prefs.penalty = PenaltyShape::piecewise_linear;
        else if (kv.value == "smooth_arctan") sc.prefs.penalty = PenaltyShape::smooth_arctan;
        else throw ParseError("unknown penalty shape '" + kv.value + "'", kv.line);
      }
      else throw ParseError("unknown prefs key '" + kv.key + "'", kv.line);
    } else if (kv.section == "grid") {
      if (kv.key == "dt_s") sc.dt_s = as_double(kv);
      else if (kv.key == "dx_m") sc.dx_m = as_double(kv);
      else if (kv.key == "horizon_s") sc.horizon_s = as_double(kv);
      else if (kv.key == "horizon_cap_s") sc.horizon_cap_s = as_double(kv);
      else throw ParseError("unknown grid key '" + kv.key + "'", kv.line);
    } else if (kv.section == "solver") {
      if (kv.key == "max_iter") sc.solver.max_iter = static_cast<int>(as_long(kv));
      else if (kv.key == "tol") sc.solver.tol = as_double(kv);
      else if (kv.key == "epsilon") sc.solver.epsilon = as_double(kv);
      else if (kv.key == "seed") sc.solver.seed = static_cast<std::uint64_t>(as_long(kv));
      else if (kv.key == "selection") {
        if (kv.value == "cost_sorted") sc.solver.selection = Selection::cost_sorted;
        else if (kv.value == "uniform_random") sc.solver.selection = Selection::uniform_random;
        else throw ParseError("unknown selection '" + kv.value + "'", kv.line);
      } else if (kv.key == "step_rule") {
        if (kv.value != "one_over_iter")
          throw ParseError("unknown step rule '" + kv.value + "'", kv.line);
      } else throw ParseError("unknown solver key '" + kv.key + "'", kv.line);
    } else {
      throw ParseError("unknown section [" + kv.section + "]", kv.line);
    }
  }

  if (have_prefs_k) {
    SchedulingPrefs p = SchedulingPrefs::lamotte_k(prefs_k);
    p.penalty = sc.prefs.penalty;
    sc.prefs = p;
  }

  if (speed_kind == "greenshields_linear") {
    sc.speed = SpeedFunction::greenshields(v_max, v_min, capacity);
  } else if (speed_kind == "quadratic") {
    sc.speed = SpeedFunction::quadratic(v_max, v_min, capacity);
  } else if (speed_kind == "table") {
    sc.speed = SpeedFunction::from_table(std::move(table));
  } else {
    throw ValidationError("unknown speed kind '" + speed_kind + "'");
  }

  if (sc.dx_m <= 0.0) sc.dx_m = sc.speed.v_max() * sc.dt_s;
  sc.validate();
  return sc;
}

void Scenario::validate() const {
  if (classes.empty() && !demand_csv) throw ValidationError("scenario has no demand");
  if (!classes.empty() && total_trips <= 0)
    throw ValidationError("total_trips must be positive for a class table");
  if (demand_csv && !std::filesystem::exists(*demand_csv))
    throw ValidationError("demand csv does not exist: " + demand_csv->string());
  prefs.validate();
  if (!(dt_s > 0.0)) throw ValidationError("dt must be positive");
  if (!(horizon_s > 0.0)) throw ValidationError("horizon must be positive");
  if (dx_m < speed.v_max() * dt_s)
    throw ConfigurationError("scenario grid violates dx >= v_max*dt");
  if (solver.max_iter < 1) throw ValidationError("max_iter must be at least 1");
  if (!(solver.tol > 0.0)) throw ValidationError("tol must be positive");
}

DemandProfile Scenario::build_demand() const {
  if (demand_csv) return load_demand_csv(*demand_csv);
  return synthesize_demand(classes, total_trips, demand_seed);
}

Grid Scenario::build_grid(const DemandProfile& profile) const {
  if (profile.t_a_max_s >= horizon_s)
    throw ValidationError("horizon does not cover the latest desired arrival");
  Grid g = make_grid(dt_s, dx_m, horizon_s, profile.x_max_m, horizon_cap_s);
  g.validate(speed);
  return g;
}

RunOutput run_scenario(const Scenario& sc, Selection selection) {
  DemandProfile profile = sc.build_demand();
  DiscreteDemand pi = discretize_demand(profile, sc.dt_s, sc.dx_m);
  Grid g = sc.build_grid(profile);

  SolverOptions opts = sc.solver;
  opts.selection = selection;
  opts.trip_count = static_cast<double>(profile.trips.size());

  RunOutput out;
  auto [mu, report] = selection == Selection::uniform_random
                          ? msa_solve(pi, sc.speed, sc.prefs, g, opts)
                          : heuristic_solve(pi, sc.speed, sc.prefs, g, opts);
  out.mu = std::move(mu);
  out.report = std::move(report);

  Grid used = g;
  used.n_t = out.report.n_t_used;
  used.horizon_s = out.report.horizon_s_used;
  out.zeta = solve_for(out.mu, sc.speed, used);
  out.series = network_series(out.zeta, std::span<const InFlowEntry>(out.mu.marginal_entries()),
                              sc.speed, g.n_k);
  return out;
}

void write_run_outputs(const RunOutput& out, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_report(out.report, out_dir / "report.txt");
  write_mu_csv(out.mu, out_dir / "mu.csv");
  write_series_csv(out.series, out_dir / "series.csv");
  write_curves_csv(out.mu, out.zeta, out_dir / "curves.csv");
  write_indicator_csv(out.report, out_dir / "indicator.csv");
}

}  // namespace dtue
