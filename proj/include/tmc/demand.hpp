#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "tmc/market.hpp"
#include "tmc/population.hpp"
#include "tmc/supply.hpp"

namespace tmc {

// Five-step time-of-day tariff; zero outside [b0, b5).
struct TollProfile {
  std::array<double, 6> breakpoints{300, 360, 420, 480, 540, 600};
  std::array<double, 5> levels{0, 0, 0, 0, 0};

  double at(double minute) const;
  // Toll charged to a departure in interval h (value at the interval start).
  double for_interval(int h) const { return at(interval_start(h)); }
  void validate() const;

  static TollProfile flat(double start, double end, double level);
};

enum class InstrumentKind { NT, CP, TMC };

struct InstrumentSpec {
  InstrumentKind kind = InstrumentKind::NT;
  TollProfile toll;  // dollars for CP, tokens for TMC, ignored for NT

  double toll_for_interval(int h) const { return kind == InstrumentKind::NT ? 0.0 : toll.for_interval(h); }
};

const char* to_string(InstrumentKind kind);

enum class Mode { car, pt };

struct AlternativeAttributes {
  Mode mode = Mode::car;
  int interval = 0;
  double forecast_tt = 0.0;
  double sde = 0.0;
  double sdl = 0.0;
  double wait = 0.0;  // PT only
  double expected_cost = 0.0;
  bool feasible = true;
};

struct Decision {
  Mode mode = Mode::pt;
  int interval = 0;
};

std::pair<double, double> schedule_delays(double depart, double preferred_arrival, double tt,
                                          double arrival_window = 0.0);

// Expected token cost of a trip. Sales are valued at `sell` terms and the
// purchase at departure at `buy` terms (they differ only inside interventions).
double opportunity_cost(double forecast_balance, double toll, double sell_price, const MarketParams& sell,
                        double buy_price, const MarketParams& buy);
inline double opportunity_cost(double forecast_balance, double toll, double price, const MarketParams& params) {
  return opportunity_cost(forecast_balance, toll, price, params, price, params);
}
// Opportunity cost of not driving: the whole day's allocation is sold.
double pt_opportunity_cost(double price, const MarketParams& params);

// I - 2c + lambda * ln(gamma + I - 2c). Throws DomainError outside the log domain.
double money_utility(double income, double cost, double lambda, double gamma);

// Systematic utility of any alternative (car or PT).
double systematic_utility(const Traveler& t, const AlternativeAttributes& alt, double lambda, double gamma);
double systematic_car_utility(const Traveler& t, const AlternativeAttributes& alt, double lambda, double gamma);
double systematic_pt_utility(const Traveler& t, const SupplyParams& supply, double cost, double lambda,
                             double gamma);

double car_utility(const Traveler& t, const AlternativeAttributes& alt, double lambda, double gamma);
double pt_utility(const Traveler& t, const SupplyParams& supply, InstrumentKind kind, double price,
                  const MarketParams& market, double lambda, double gamma);

// Minute and interval at which a PT rider leaves home.
int pt_departure_minute(const Traveler& t, const SupplyParams& supply);

struct ChoiceContext {
  const InstrumentSpec* instrument = nullptr;
  const SupplyParams* supply = nullptr;
  std::span<const double> tt_forecast;  // one value per interval of the day
  double lambda = 3.0;
  double gamma = 2.0;
  double arrival_window = 0.0;
  int earliest_interval = 0;  // re-planning drops intervals already in the past

  // TMC only.
  const MarketParams* base_market = nullptr;
  double base_price = 1.0;
  std::span<const MarketTerms> day_terms;         // buy terms per minute; empty means base terms
  std::span<const double> balance_at_interval;    // forecast balance per window interval
};

// Feasible alternatives (car intervals of the window in order, then PT).
// Throws DomainError if nothing is affordable.
void build_choice_set(const Traveler& t, const ChoiceContext& ctx, std::vector<AlternativeAttributes>& out);
std::vector<AlternativeAttributes> build_choice_set(const Traveler& t, const ChoiceContext& ctx);

Decision choose(const Traveler& t, std::span<const AlternativeAttributes> choice_set, double lambda,
                double gamma);

}  // namespace tmc
