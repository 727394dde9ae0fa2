#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "dtue/equilibrium.hpp"
#include "dtue/oracle.hpp"

namespace dtue {

// All emitted files re-parse under the readers in this header. Doubles are written
// with enough digits to round-trip exactly, so identical runs give identical bytes.

std::string format_double(double v);

// `t_s,accumulation,speed_mps,cum_inflow,cum_outflow`, one row per time bin.
void write_series_csv(const NetworkSeries& s, const std::filesystem::path& path);
NetworkSeries read_series_csv(const std::filesystem::path& path);

// `tau_d,kappa,tau_a,mass`
void write_mu_csv(const DisaggInFlow& mu, const std::filesystem::path& path);
DisaggInFlow read_mu_csv(const std::filesystem::path& path, double dt_s, double dx_m);

// `t_s,cum_departures,cum_arrivals`: both columns nondecreasing, ending at the total
// mass once everything has drained. Arrivals come from zeta.
void write_curves_csv(const DisaggInFlow& mu, const CharacteristicDistance& zeta,
                      const std::filesystem::path& path);

// Flat `key = value` report.
void write_report(const EquilibriumReport& r, const std::filesystem::path& path);
std::map<std::string, std::string> read_report(const std::filesystem::path& path);

// `iteration,indicator,peak_accumulation,max_inflow_density`
void write_indicator_csv(const EquilibriumReport& r, const std::filesystem::path& path);

// `agent,departure_s,arrival_s,cost`
void write_arrivals_csv(const AgentList& agents, const std::vector<double>& arrivals,
                        const std::vector<double>& costs, const std::filesystem::path& path);

}  // namespace dtue
