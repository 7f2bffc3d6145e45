#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "tmc/engine.hpp"
#include "tmc/metrics.hpp"

namespace tmc {

// Upper income percentile bounds of the elasticity groups.
inline constexpr std::array<double, 5> kIncomeGroupBounds{25, 50, 75, 90, 100};

struct ElasticityOptions {
  double toll_start = 390.0;  // flat toll window
  double toll_end = 570.0;
  double peak_start = 420.0;  // demand counted for departures in [peak_start, peak_end)
  double peak_end = 480.0;
  double relative_step = 0.1;  // +-10% arc
  // false: choices re-evaluated against the equilibrium forecasts of the base
  // toll; true: each perturbed price is run to its own equilibrium.
  bool equilibrium = false;
};

struct ElasticityRow {
  double toll = 0.0;
  std::array<double, 5> by_group{};
  double total = 0.0;
};

// Arc elasticity of peak car departures. At zero toll the fuel cost is perturbed.
std::vector<ElasticityRow> elasticity_table(const Scenario& cp, const std::vector<double>& tolls,
                                            const ElasticityOptions& options = {},
                                            std::shared_ptr<const Population> population = nullptr);

void write_elasticity_csv(std::ostream& out, const std::vector<ElasticityRow>& rows);

// An instrument's equilibrium with its welfare relative to NT.
struct InstrumentOutcome {
  EquilibriumResult equilibrium;
  WelfareReport welfare;
};

// Runs `scenario` and, unless given, its NT counterpart with the same
// population and seed. A warm start supplies the travel forecasts only.
InstrumentOutcome evaluate(const Scenario& scenario, std::shared_ptr<const Population> population = nullptr,
                           const EquilibriumResult* nt = nullptr, const SimulationState* warm_start = nullptr);

Scenario as_instrument(const Scenario& scenario, InstrumentKind kind);

// Restarts `scenario` from an equilibrium state renumbered as day 0 and
// returns day `event_day`, so events registered on that day hit a settled
// system.
DayResult event_day(const Scenario& scenario, const SimulationState& equilibrium, int event_day,
                    std::shared_ptr<const Population> population = nullptr);

}  // namespace tmc
