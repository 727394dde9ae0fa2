#pragma once

#include "dtue/equilibrium.hpp"

namespace dtue {

// Day-to-day MSA baseline: identical loop to heuristic_solve except the cells to
// reschedule are drawn in seeded uniform-random order instead of sorted by cost.
std::pair<DisaggInFlow, EquilibriumReport> msa_solve(const DiscreteDemand& pi,
                                                     const SpeedFunction& v,
                                                     const SchedulingPrefs& prefs, const Grid& g,
                                                     const SolverOptions& opts);

}  // namespace dtue
