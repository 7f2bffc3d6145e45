#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tmc/engine.hpp"

namespace tmc {

// Half-day regulator revenue under congestion pricing: tolls plus fares.
double regulator_revenue_cp(const DayResult& day);

struct TmcRevenue {
  double fares = 0.0;
  double token_net = 0.0;  // buying costs minus selling revenues, fees included
  double total() const { return fares + token_net; }
};
TmcRevenue regulator_revenue_tmc(const DayResult& day);

// Half-day revenue of any instrument.
double regulator_revenue(const DayResult& day);

double user_benefit(double experienced_utility_j, double experienced_utility_nt);

// Gini coefficient sum|xi - xj| / (2 n sum x). Negative entries are used as
// they are; the result may then leave [0, 1].
double gini(std::span<const double> values);

// Mean experienced car travel time over free flow; empty without car trips.
std::optional<double> tti(const DayResult& day, double free_flow);
std::optional<double> tti(std::span<const DayResult> days, double free_flow);

struct BuybackStats {
  double fraction = 0.0;    // buys preceded by a same-day sale / all buys
  double per_capita = 0.0;  // buyback buys per traveler per day
  long buys = 0;
  long buybacks = 0;
};
BuybackStats buyback_stats(std::span<const Transaction> log, int n_travelers, int days = 1);

struct WelfareReport {
  double user_benefit = 0.0;        // Z, full day
  double regulator_revenue = 0.0;   // K, full day (morning and mirrored evening trip)
  double social_welfare = 0.0;      // Z + K
  std::vector<double> z;            // per traveler
  double gini = 0.0;
  bool negative_gini_inputs = false;
  std::optional<double> tti;
  double pt_share = 0.0;
  double buyback_fraction = 0.0;
  double buyback_per_capita = 0.0;
  double mean_price = 0.0;
  int days = 0;
  bool converged = true;
};

// Welfare of the days in `j` relative to the NT days, each averaged per traveler.
WelfareReport compute_welfare(std::span<const DayResult> j, std::span<const DayResult> nt, const Population& pop,
                              double free_flow);
WelfareReport compute_welfare(const EquilibriumResult& j, const EquilibriumResult& nt, const Population& pop,
                              double free_flow);

// Mean experienced utility per traveler over the given days.
std::vector<double> mean_utilities(std::span<const DayResult> days);

// Cumulative user benefit ordered by benefit and by income percentile.
void write_benefit_curves(std::ostream& out, const WelfareReport& report, const Population& pop);

}  // namespace tmc
