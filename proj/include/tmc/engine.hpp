#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tmc/demand.hpp"
#include "tmc/market.hpp"
#include "tmc/population.hpp"
#include "tmc/supply.hpp"

namespace tmc {

enum class InitialWallets { uniform, full, empty };

struct Scenario {
  InstrumentSpec instrument;
  PopulationConfig population;
  MarketParams market;
  SupplyParams supply;
  double theta_tt = 0.1;
  double theta_dep = 0.1;
  double lambda = 3.0;
  double gamma = 2.0;
  double arrival_window = 0.0;
  int horizon = 250;
  double convergence_eps = 0.01;
  int convergence_window = 5;
  InitialWallets initial_wallets = InitialWallets::uniform;
  std::vector<double> initial_tt;  // empty: free flow everywhere
  bool daily_jitter = false;       // redraw within-interval entry minutes every day
  std::vector<MarketIntervention> interventions;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  void validate() const;
};

struct TravelerDay {
  Mode mode = Mode::pt;
  int interval = 0;
  int departure = 0;         // minute of day
  double travel_time = 0.0;  // experienced
  double sde = 0.0;
  double sdl = 0.0;
  double toll = 0.0;         // dollars paid (CP)
  double token_cash = 0.0;   // dollars paid for tokens minus dollars received (TMC)
  double money_cost = 0.0;   // experienced per-trip cost c
  double utility = 0.0;      // experienced utility including the frozen draw
  double end_balance = 0.0;
  bool replanned = false;
  bool forced_pt = false;
};

struct TokenTotals {
  double allocated = 0.0;
  double spent = 0.0;
  double bought = 0.0;
  double sold = 0.0;
  double expired = 0.0;
  double start_balance = 0.0;
  double end_balance = 0.0;
};

struct DayResult {
  InstrumentKind instrument = InstrumentKind::NT;
  int day = 0;
  double price = 0.0;
  std::vector<TravelerDay> travelers;
  std::vector<double> interval_tt;     // realized, per interval
  std::vector<int> car_departures;     // per interval
  std::vector<int> pt_departures;      // per interval
  std::vector<long> queue;             // vehicles waiting after each minute's service
  std::vector<Transaction> transactions;
  double token_revenue = 0.0;  // buys minus sells, fees included, half day
  double fare_revenue = 0.0;
  double toll_revenue = 0.0;
  TokenTotals tokens;
  int forced_pt = 0;
  int replanned = 0;
  int clamped_utilities = 0;

  int car_trips() const;
};

struct SimulationState {
  int day = 0;
  std::vector<double> tt_forecast;
  std::vector<double> dep_forecast;
  std::vector<double> balance;
  double price = 1.0;
};

struct EquilibriumResult {
  bool converged = false;
  int days_run = 0;
  std::vector<double> norms;
  std::vector<double> prices;
  std::vector<double> token_revenues;
  std::vector<DayResult> window;  // the last `convergence_window` days, oldest first
  SimulationState final_state;

  const DayResult& final_day() const { return window.back(); }
};

double infinity_norm(std::span<const double> a, std::span<const double> b);

class Simulation {
 public:
  explicit Simulation(Scenario scenario, std::shared_ptr<const Population> population = nullptr);

  const Scenario& scenario() const { return scenario_; }
  const Population& population() const { return *population_; }
  std::shared_ptr<const Population> shared_population() const { return population_; }
  const SimulationState& state() const { return state_; }
  void set_state(SimulationState state);
  SimulationState initial_state() const;

  // Simulates the current day without touching the day-to-day state.
  DayResult run_day() const;
  // Applies learning, wallet carry-over and price adjustment; returns the
  // infinity norm between consecutive travel-time forecasts.
  double advance(const DayResult& day);
  EquilibriumResult run_to_equilibrium();

 private:
  Scenario scenario_;
  std::shared_ptr<const Population> population_;
  SimulationState state_;
  std::vector<int> jitter_;
};

EquilibriumResult run_to_equilibrium(const Scenario& scenario);

// Registers a capacity drop on `day` (copying the scenario).
Scenario inject_event(const Scenario& scenario, const CapacityOverride& event);
Scenario inject_event(const Scenario& scenario, const MarketIntervention& event);

}  // namespace tmc
