#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dtue/errors.hpp"
#include "dtue/io.hpp"
#include "dtue/scenario.hpp"
#include "helpers.hpp"

using namespace dtue;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path tmp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("mu csv round-trips bit for bit") {
  std::vector<MuEntry> entries = {{10, 2, 20, 1.0 / 3.0}, {40, 5, 50, 2.0 / 3.0}};
  DisaggInFlow mu = DisaggInFlow::from_entries(entries, 1.0, 10.0);
  auto path = tmp_dir("dtue_io") / "mu.csv";
  write_mu_csv(mu, path);
  DisaggInFlow back = read_mu_csv(path, 1.0, 10.0);
  REQUIRE(back.entries().size() == mu.entries().size());
  for (std::size_t i = 0; i < mu.entries().size(); ++i) {
    CHECK(back.entries()[i].tau_d == mu.entries()[i].tau_d);
    CHECK(back.entries()[i].mass == mu.entries()[i].mass);
  }
}

TEST_CASE("series csv round-trips") {
  NetworkSeries s;
  s.dt_s = 2.0;
  s.accumulation = {0.0, 0.25, 0.125};
  s.speed_mps = {10.0, 7.5, 8.75};
  s.cum_inflow = {0.0, 0.25, 0.25};
  s.cum_outflow = {0.0, 0.0, 0.125};
  auto path = tmp_dir("dtue_io") / "series.csv";
  write_series_csv(s, path);
  NetworkSeries back = read_series_csv(path);
  CHECK(back.dt_s == 2.0);
  REQUIRE(back.n_t() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.accumulation[i] == s.accumulation[i]);
    CHECK(back.speed_mps[i] == s.speed_mps[i]);
  }
}

TEST_CASE("report writes the named keys and re-parses") {
  EquilibriumReport r;
  r.iterations = 42;
  r.converged = true;
  r.final_indicator = 3.37e-3;
  r.avg_cost = 12.01;
  r.total_travel_time_s = 26984.0;
  r.epsilon_residual_mass = 0.0;
  auto path = tmp_dir("dtue_io") / "report.txt";
  write_report(r, path);
  auto kv = read_report(path);
  CHECK(kv.at("iterations") == "42");
  CHECK(kv.at("converged") == "true");
  CHECK(std::stod(kv.at("final_indicator")) == 3.37e-3);
  CHECK(std::stod(kv.at("avg_cost")) == 12.01);
  CHECK(std::stod(kv.at("total_travel_time_s")) == 26984.0);
  CHECK(kv.count("epsilon_residual_mass") == 1);
}

TEST_CASE("scenario file parses, validates, and runs end to end") {
  Scenario sc = Scenario::load(testing::scenario_path("pulse.scn"));
  CHECK(sc.speed.v_max() > sc.speed.v_min());
  CHECK(sc.dt_s == 1.0);

  RunOutput out = run_scenario(sc, Selection::cost_sorted);
  CHECK(out.report.converged);
  CHECK(out.series.cum_outflow.back() == doctest::Approx(1.0).epsilon(1e-9));

  // curves: nondecreasing, arrivals never lead departures, both end at 1
  auto dir = tmp_dir("dtue_io_run");
  write_run_outputs(out, dir);
  std::ifstream curves(dir / "curves.csv");
  std::string line;
  std::getline(curves, line);
  double prev_d = 0.0, prev_a = 0.0, d = 0.0, a = 0.0;
  while (std::getline(curves, line)) {
    std::stringstream ss(line);
    std::string f;
    std::getline(ss, f, ',');
    std::getline(ss, f, ',');
    d = std::stod(f);
    std::getline(ss, f, ',');
    a = std::stod(f);
    CHECK(d >= prev_d);
    CHECK(a >= prev_a);
    CHECK(a <= d + 1e-12);
    prev_d = d;
    prev_a = a;
  }
  CHECK(d == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(a == doctest::Approx(1.0).epsilon(1e-9));

  // every emitted file re-parses under this module's readers
  CHECK_NOTHROW(read_report(dir / "report.txt"));
  CHECK_NOTHROW(read_mu_csv(dir / "mu.csv", sc.dt_s, sc.dx_m));
  CHECK_NOTHROW(read_series_csv(dir / "series.csv"));
}

TEST_CASE("identical seeds give byte-identical run outputs") {
  Scenario sc = Scenario::load(testing::scenario_path("two_pulse.scn"));
  auto dir_a = tmp_dir("dtue_det_a");
  auto dir_b = tmp_dir("dtue_det_b");
  write_run_outputs(run_scenario(sc, Selection::cost_sorted), dir_a);
  write_run_outputs(run_scenario(sc, Selection::cost_sorted), dir_b);
  for (const char* f : {"report.txt", "mu.csv", "series.csv", "curves.csv", "indicator.csv"})
    CHECK(slurp(dir_a / f) == slurp(dir_b / f));
}

TEST_CASE("scenario parser rejects malformed files") {
  auto dir = tmp_dir("dtue_scn");
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name);
    out << body;
    return dir / name;
  };
  CHECK_THROWS_AS(Scenario::load(write("no_demand.scn", "[speed]\nkind = quadratic\n"
                                                        "v_max_mps = 10\nv_min_mps = 1\n"
                                                        "[grid]\nhorizon_s = 100\n")),
                  ValidationError);
  CHECK_THROWS_AS(Scenario::load(write("bad_key.scn", "[grid]\nwhat = 3\n")), ParseError);
  CHECK_THROWS_AS(Scenario::load(write("orphan.scn", "dt_s = 1\n")), ParseError);
  CHECK_THROWS_AS(Scenario::load(write("bad_num.scn", "[grid]\ndt_s = abc\n")), ParseError);
}

TEST_CASE("cfl violation in a scenario is a configuration error") {
  auto dir = tmp_dir("dtue_scn");
  std::ofstream out(dir / "cfl.scn");
  out << "[demand]\ntotal_trips = 10\nclass = 1.0 500 0 100 0 200\n"
      << "[speed]\nkind = greenshields_linear\nv_max_mps = 10\nv_min_mps = 1\n"
      << "[grid]\ndt_s = 1\ndx_m = 5\nhorizon_s = 400\n";
  out.close();
  CHECK_THROWS_AS(Scenario::load(dir / "cfl.scn"), ConfigurationError);
}
