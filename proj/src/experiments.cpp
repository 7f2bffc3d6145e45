#include "tmc/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace tmc {

namespace {

std::vector<int> income_groups(const Population& pop) {
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pop[a].income < pop[b].income; });
  std::vector<int> group(pop.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const double pct = 100.0 * static_cast<double>(rank + 1) / static_cast<double>(order.size());
    int g = 0;
    while (g < 4 && pct > kIncomeGroupBounds[static_cast<std::size_t>(g)] + 1e-12) ++g;
    group[order[rank]] = g;
  }
  return group;
}

std::array<double, 6> peak_demand(const DayResult& day, const std::vector<int>& group, const ElasticityOptions& o) {
  std::array<double, 6> q{};
  for (std::size_t n = 0; n < day.travelers.size(); ++n) {
    const auto& t = day.travelers[n];
    if (t.mode != Mode::car) continue;
    const double start = interval_start(t.interval);
    if (start < o.peak_start || start >= o.peak_end) continue;
    q[static_cast<std::size_t>(group[n])] += 1.0;
    q[5] += 1.0;
  }
  return q;
}

double arc(double q_hi, double q_lo, double p_hi, double p_lo) {
  if (q_hi + q_lo == 0.0) return 0.0;
  return ((q_hi - q_lo) / (q_hi + q_lo)) / ((p_hi - p_lo) / (p_hi + p_lo));
}

}  // namespace

Scenario as_instrument(const Scenario& scenario, InstrumentKind kind) {
  Scenario s = scenario;
  s.instrument.kind = kind;
  if (kind != InstrumentKind::TMC) s.interventions.clear();
  return s;
}

std::vector<ElasticityRow> elasticity_table(const Scenario& cp, const std::vector<double>& tolls,
                                            const ElasticityOptions& o, std::shared_ptr<const Population> population) {
  if (!population)
    population = std::make_shared<const Population>(synthesize_population(cp.population, cp.supply.free_flow));
  const std::vector<int> group = income_groups(*population);

  std::vector<ElasticityRow> rows;
  for (double toll : tolls) {
    Scenario base = as_instrument(cp, InstrumentKind::CP);
    base.instrument.toll = TollProfile::flat(o.toll_start, o.toll_end, toll);
    Simulation sim(base, population);
    const EquilibriumResult eq = sim.run_to_equilibrium();

    auto perturbed = [&](double factor) {
      Scenario s = base;
      if (toll > 0.0) {
        s.instrument.toll = TollProfile::flat(o.toll_start, o.toll_end, toll * factor);
      } else {
        s.supply.car_cost = base.supply.car_cost * factor;
      }
      Simulation p(s, population);
      if (o.equilibrium) {
        p.set_state(eq.final_state);
        const EquilibriumResult r = p.run_to_equilibrium();
        return peak_demand(r.final_day(), group, o);
      }
      p.set_state(eq.final_state);
      return peak_demand(p.run_day(), group, o);
    };
    const double hi = 1.0 + o.relative_step;
    const double lo = 1.0 - o.relative_step;
    const auto q_hi = perturbed(hi);
    const auto q_lo = perturbed(lo);
    ElasticityRow row;
    row.toll = toll;
    for (std::size_t g = 0; g < 5; ++g) row.by_group[g] = arc(q_hi[g], q_lo[g], hi, lo);
    row.total = arc(q_hi[5], q_lo[5], hi, lo);
    rows.push_back(row);
  }
  return rows;
}

void write_elasticity_csv(std::ostream& out, const std::vector<ElasticityRow>& rows) {
  out << "toll,le25,p25_50,p50_75,p75_90,gt90,total\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.toll, r.by_group[0], r.by_group[1],
                  r.by_group[2], r.by_group[3], r.by_group[4], r.total);
    out << buf;
  }
}

InstrumentOutcome evaluate(const Scenario& scenario, std::shared_ptr<const Population> population,
                           const EquilibriumResult* nt, const SimulationState* warm_start) {
  Simulation sim(scenario, std::move(population));
  EquilibriumResult nt_local;
  if (!nt) {
    Simulation base(as_instrument(scenario, InstrumentKind::NT), sim.shared_population());
    nt_local = base.run_to_equilibrium();
    nt = &nt_local;
  }
  if (warm_start) {
    // Only the travel forecasts carry over; wallets and price start fresh.
    SimulationState s = sim.initial_state();
    s.tt_forecast = warm_start->tt_forecast;
    s.dep_forecast = warm_start->dep_forecast;
    sim.set_state(std::move(s));
  }
  InstrumentOutcome out;
  out.equilibrium = sim.run_to_equilibrium();
  out.welfare = compute_welfare(out.equilibrium, *nt, sim.population(), scenario.supply.free_flow);
  return out;
}

DayResult event_day(const Scenario& scenario, const SimulationState& equilibrium, int event_day,
                    std::shared_ptr<const Population> population) {
  if (event_day < 0 || event_day >= scenario.horizon) throw ConfigError("events", "event day outside the horizon");
  Simulation sim(scenario, std::move(population));
  SimulationState s = equilibrium;
  s.day = 0;
  sim.set_state(std::move(s));
  for (int d = 0; d < event_day; ++d) sim.advance(sim.run_day());
  return sim.run_day();
}

}  // namespace tmc
