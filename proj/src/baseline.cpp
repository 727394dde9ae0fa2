#include "dtue/baseline.hpp"

namespace dtue {

std::pair<DisaggInFlow, EquilibriumReport> run_solver_with_selection(
    const DiscreteDemand& pi, const SpeedFunction& v, const SchedulingPrefs& prefs, const Grid& g,
    const SolverOptions& opts, Selection selection);

std::pair<DisaggInFlow, EquilibriumReport> msa_solve(const DiscreteDemand& pi,
                                                     const SpeedFunction& v,
                                                     const SchedulingPrefs& prefs, const Grid& g,
                                                     const SolverOptions& opts) {
  return run_solver_with_selection(pi, v, prefs, g, opts, Selection::uniform_random);
}

}  // namespace dtue
