// Command-line front end: solve | baseline | compare | oracle.
// Exit codes: 0 converged / success, 2 max_iter reached without convergence,
// 1 validation or configuration failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dtue/baseline.hpp"
#include "dtue/errors.hpp"
#include "dtue/io.hpp"
#include "dtue/oracle.hpp"
#include "dtue/scenario.hpp"

namespace {

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = "out";
  std::string solver = "mfg";
  std::optional<long> seed;
  std::optional<int> max_iter;
  std::optional<double> tol;
  std::optional<double> dt;
  std::optional<double> dx;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_solver_flag) {
  cmd->add_option("--scenario", a.scenario_path, "scenario file")
      ->required()
      ->envname("DTUE_SCENARIO");
  cmd->add_option("--out-dir", a.out_dir, "output directory")->envname("DTUE_OUT_DIR");
  if (with_solver_flag)
    cmd->add_option("--solver", a.solver, "mfg | msa")
        ->check(CLI::IsMember({"mfg", "msa"}))
        ->envname("DTUE_SOLVER");
  cmd->add_option("--seed", a.seed, "solver seed override")->envname("DTUE_SEED");
  cmd->add_option("--max-iter", a.max_iter, "iteration cap override")->envname("DTUE_MAX_ITER");
  cmd->add_option("--tol", a.tol, "convergence tolerance override")->envname("DTUE_TOL");
  cmd->add_option("--dt", a.dt, "time step override [s]")->envname("DTUE_DT");
  cmd->add_option("--dx", a.dx, "space step override [m]")->envname("DTUE_DX");
}

dtue::Scenario load_with_overrides(const CommonArgs& a) {
  dtue::Scenario sc = dtue::Scenario::load(a.scenario_path);
  if (a.seed) sc.solver.seed = static_cast<std::uint64_t>(*a.seed);
  if (a.max_iter) sc.solver.max_iter = *a.max_iter;
  if (a.tol) sc.solver.tol = *a.tol;
  if (a.dt) sc.dt_s = *a.dt;
  if (a.dx) sc.dx_m = *a.dx;
  if (a.dt && !a.dx) sc.dx_m = sc.speed.v_max() * sc.dt_s;
  sc.validate();
  return sc;
}

int finish(const dtue::EquilibriumReport& rep) {
  std::printf("iterations=%d converged=%s final_indicator=%.6g avg_cost=%.6g\n", rep.iterations,
              rep.converged ? "true" : "false", rep.final_indicator, rep.avg_cost);
  return rep.converged ? 0 : 2;
}

int cmd_solve(const CommonArgs& a) {
  dtue::Scenario sc = load_with_overrides(a);
  auto selection =
      a.solver == "msa" ? dtue::Selection::uniform_random : dtue::Selection::cost_sorted;
  dtue::RunOutput out = dtue::run_scenario(sc, selection);
  dtue::write_run_outputs(out, a.out_dir);
  return finish(out.report);
}

int cmd_compare(const CommonArgs& a) {
  dtue::Scenario sc = load_with_overrides(a);
  dtue::RunOutput mfg = dtue::run_scenario(sc, dtue::Selection::cost_sorted);
  dtue::RunOutput msa = dtue::run_scenario(sc, dtue::Selection::uniform_random);

  std::filesystem::create_directories(a.out_dir);
  dtue::write_run_outputs(mfg, std::filesystem::path(a.out_dir) / "mfg");
  dtue::write_run_outputs(msa, std::filesystem::path(a.out_dir) / "msa");

  auto pct = [](double msa_v, double mfg_v) {
    return msa_v != 0.0 ? 100.0 * (msa_v - mfg_v) / msa_v : 0.0;
  };
  std::string table;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %12s %16s %14s %20s\n", "solver", "iterations",
                "indicator", "avg_cost", "total_travel_time_s");
  table += buf;
  for (const auto* r : {&mfg.report, &msa.report}) {
    std::snprintf(buf, sizeof buf, "%-12s %12d %16.6g %14.6g %20.6g\n",
                  r == &mfg.report ? "mfg" : "msa", r->iterations, r->final_indicator,
                  r->avg_cost, r->total_travel_time_s);
    table += buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s %11.2f%% %15.2f%% %13.2f%% %19.2f%%\n", "improvement",
                pct(msa.report.iterations, mfg.report.iterations),
                pct(msa.report.final_indicator, mfg.report.final_indicator),
                pct(msa.report.avg_cost, mfg.report.avg_cost),
                pct(msa.report.total_travel_time_s, mfg.report.total_travel_time_s));
  table += buf;

  std::fputs(table.c_str(), stdout);
  std::ofstream out(std::filesystem::path(a.out_dir) / "compare.txt");
  out << table;
  return mfg.report.converged ? 0 : 2;
}

int cmd_oracle(const CommonArgs& a, int n_agents, long oracle_seed, const std::string& mu_path) {
  dtue::Scenario sc = load_with_overrides(a);
  std::filesystem::create_directories(a.out_dir);

  dtue::DisaggInFlow mu;
  if (!mu_path.empty()) {
    mu = dtue::read_mu_csv(mu_path, sc.dt_s, sc.dx_m);
  } else {
    dtue::RunOutput run = dtue::run_scenario(sc, dtue::Selection::cost_sorted);
    dtue::write_run_outputs(run, std::filesystem::path(a.out_dir) / "solve");
    mu = std::move(run.mu);
  }

  dtue::AgentList agents =
      dtue::sample_agents(mu, n_agents, static_cast<std::uint64_t>(oracle_seed));
  double cap = sc.horizon_cap_s > 0.0 ? sc.horizon_cap_s : 16.0 * sc.horizon_s;
  dtue::MicroResult res = dtue::micro_simulate(agents, sc.speed, sc.dt_s, cap);
  std::vector<double> costs(agents.agents.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const dtue::Agent& ag = agents.agents[i];
    double travel = res.arrivals_s[i] - ag.departure_s;
    int abin = static_cast<int>(std::floor(res.arrivals_s[i] / sc.dt_s));
    int dbin = static_cast<int>(std::floor(ag.desired_arrival_s / sc.dt_s));
    double dev = (abin - dbin) * sc.dt_s;
    costs[i] = sc.prefs.alpha * travel +
               (dev > 0.0 ? sc.prefs.gamma * dev : (dev < 0.0 ? sc.prefs.beta * -dev : 0.0));
  }
  dtue::write_series_csv(res.series, std::filesystem::path(a.out_dir) / "oracle_series.csv");
  dtue::write_arrivals_csv(agents, res.arrivals_s, costs,
                           std::filesystem::path(a.out_dir) / "arrivals.csv");
  std::printf("oracle: %d agents simulated, peak accumulation %.6g\n", agents.n(),
              res.series.peak_accumulation());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Departure-time user equilibrium solver for the generalized bathtub model"};
  app.require_subcommand(1);

  CommonArgs solve_args, baseline_args, compare_args, oracle_args;
  int n_agents = 1000;
  long oracle_seed = 1;
  std::string mu_path;

  CLI::App* solve = app.add_subcommand("solve", "solve the scheduling equilibrium");
  add_common(solve, solve_args, true);
  CLI::App* baseline = app.add_subcommand("baseline", "run the MSA baseline solver");
  add_common(baseline, baseline_args, false);
  CLI::App* compare = app.add_subcommand("compare", "run both solvers and tabulate");
  add_common(compare, compare_args, false);
  CLI::App* oracle = app.add_subcommand("oracle", "finite-n micro-simulation of a solution");
  add_common(oracle, oracle_args, false);
  oracle->add_option("--n", n_agents, "number of sampled agents");
  oracle->add_option("--oracle-seed", oracle_seed, "sampling seed");
  oracle->add_option("--mu", mu_path, "mu.csv to sample from (default: solve first)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_args);
    if (baseline->parsed()) {
      baseline_args.solver = "msa";
      return cmd_solve(baseline_args);
    }
    if (compare->parsed()) return cmd_compare(compare_args);
    if (oracle->parsed()) return cmd_oracle(oracle_args, n_agents, oracle_seed, mu_path);
  } catch (const dtue::HorizonOverflowError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
