#include "dtue/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtue/errors.hpp"

namespace dtue {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::vector<double> parse_row(const std::string& line, std::size_t n_fields, long line_no) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      out.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw ParseError("cannot parse '" + field + "'", line_no);
    }
  }
  if (out.size() != n_fields)
    throw ParseError("expected " + std::to_string(n_fields) + " fields", line_no);
  return out;
}

}  // namespace

void write_series_csv(const NetworkSeries& s, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "t_s,accumulation,speed_mps,cum_inflow,cum_outflow\n";
  for (int t = 0; t < s.n_t(); ++t)
    out << format_double(t * s.dt_s) << ',' << format_double(s.accumulation[t]) << ','
        << format_double(s.speed_mps[t]) << ',' << format_double(s.cum_inflow[t]) << ','
        << format_double(s.cum_outflow[t]) << '\n';
}

NetworkSeries read_series_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t_s,", 0) != 0)
    throw ParseError("bad series header in " + path.string(), 1);
  NetworkSeries s;
  long line_no = 1;
  std::vector<double> ts;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = parse_row(line, 5, line_no);
    ts.push_back(f[0]);
    s.accumulation.push_back(f[1]);
    s.speed_mps.push_back(f[2]);
    s.cum_inflow.push_back(f[3]);
    s.cum_outflow.push_back(f[4]);
  }
  s.dt_s = ts.size() >= 2 ? ts[1] - ts[0] : 1.0;
  return s;
}

void write_mu_csv(const DisaggInFlow& mu, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "tau_d,kappa,tau_a,mass\n";
  for (const MuEntry& e : mu.entries())
    out << e.tau_d << ',' << e.kappa << ',' << e.tau_a << ',' << format_double(e.mass) << '\n';
}

DisaggInFlow read_mu_csv(const std::filesystem::path& path, double dt_s, double dx_m) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("tau_d,", 0) != 0)
    throw ParseError("bad mu header in " + path.string(), 1);
  std::vector<MuEntry> entries;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = parse_row(line, 4, line_no);
    entries.push_back({static_cast<int>(f[0]), static_cast<int>(f[1]), static_cast<int>(f[2]),
                       f[3]});
  }
  return DisaggInFlow::from_entries(std::move(entries), dt_s, dx_m);
}

void write_curves_csv(const DisaggInFlow& mu, const CharacteristicDistance& zeta,
                      const std::filesystem::path& path) {
  const int n_t = zeta.n_t();
  std::vector<double> dep(static_cast<std::size_t>(n_t), 0.0);
  std::vector<double> arr(static_cast<std::size_t>(n_t), 0.0);
  for (const MuEntry& e : mu.entries()) {
    dep[static_cast<std::size_t>(e.tau_d)] += e.mass;
    double a = arrival_time_of(zeta, e.tau_d, e.kappa);
    if (!std::isfinite(a))
      throw HorizonOverflowError("cannot emit curves: mass does not drain", e.mass);
    int abin = std::min(static_cast<int>(std::floor(a / zeta.dt_s)), n_t - 1);
    arr[static_cast<std::size_t>(abin)] += e.mass;
  }
  auto out = open_out(path);
  out << "t_s,cum_departures,cum_arrivals\n";
  double cd = 0.0, ca = 0.0;
  for (int t = 0; t < n_t; ++t) {
    cd += dep[static_cast<std::size_t>(t)];
    ca += arr[static_cast<std::size_t>(t)];
    out << format_double(t * zeta.dt_s) << ',' << format_double(cd) << ',' << format_double(ca)
        << '\n';
  }
}

void write_report(const EquilibriumReport& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "iterations = " << r.iterations << '\n';
  out << "converged = " << (r.converged ? "true" : "false") << '\n';
  out << "final_indicator = " << format_double(r.final_indicator) << '\n';
  out << "avg_cost = " << format_double(r.avg_cost) << '\n';
  out << "total_travel_time_s = " << format_double(r.total_travel_time_s) << '\n';
  out << "epsilon_residual_mass = " << format_double(r.epsilon_residual_mass) << '\n';
  out << "horizon_s_used = " << format_double(r.horizon_s_used) << '\n';
  out << "initial_indicator = " << format_double(r.initial_indicator) << '\n';
  out << "initial_peak_accumulation = " << format_double(r.initial_peak_accumulation) << '\n';
  out << "clamped_speed_evals = " << r.clamped_speed_evals << '\n';
  out << "clamped_initial_cells = " << r.clamped_initial_cells << '\n';
}

std::map<std::string, std::string> read_report(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

void write_indicator_csv(const EquilibriumReport& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "iteration,indicator,peak_accumulation,max_inflow_density\n";
  for (std::size_t i = 0; i < r.indicator_history.size(); ++i)
    out << (i + 1) << ',' << format_double(r.indicator_history[i]) << ','
        << format_double(r.peak_accumulation_history[i]) << ','
        << format_double(r.max_inflow_density_history[i]) << '\n';
}

void write_arrivals_csv(const AgentList& agents, const std::vector<double>& arrivals,
                        const std::vector<double>& costs, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "agent,departure_s,arrival_s,cost\n";
  for (std::size_t i = 0; i < agents.agents.size(); ++i)
    out << i << ',' << format_double(agents.agents[i].departure_s) << ','
        << format_double(arrivals[i]) << ',' << format_double(costs[i]) << '\n';
}

}  // namespace dtue
