#include "tmc/demand.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tmc {

double TollProfile::at(double minute) const {
  if (minute < breakpoints[0] || minute >= breakpoints[5]) return 0.0;
  for (int k = 0; k < 5; ++k) {
    if (minute < breakpoints[static_cast<std::size_t>(k + 1)]) return levels[static_cast<std::size_t>(k)];
  }
  return 0.0;
}

void TollProfile::validate() const {
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    if (!(breakpoints[k] < breakpoints[k + 1]))
      throw ConfigError("instrument.toll.breakpoints", "must be strictly increasing");
  }
  for (double v : levels) {
    if (!(v >= 0.0)) throw ConfigError("instrument.toll.levels", "must be >= 0");
  }
}

TollProfile TollProfile::flat(double start, double end, double level) {
  TollProfile p;
  const double step = (end - start) / 5.0;
  for (int k = 0; k < 6; ++k) p.breakpoints[static_cast<std::size_t>(k)] = start + step * k;
  p.breakpoints[5] = end;
  p.levels.fill(level);
  return p;
}

const char* to_string(InstrumentKind kind) {
  switch (kind) {
    case InstrumentKind::NT: return "NT";
    case InstrumentKind::CP: return "CP";
    case InstrumentKind::TMC: return "TMC";
  }
  return "?";
}

std::pair<double, double> schedule_delays(double depart, double preferred_arrival, double tt,
                                          double arrival_window) {
  if (tt < 0.0) throw DomainError("schedule_delays: negative travel time");
  const double arrival = depart + tt;
  const double sde = std::max(0.0, preferred_arrival - arrival_window - arrival);
  const double sdl = std::max(0.0, arrival - preferred_arrival - arrival_window);
  return {sde, sdl};
}

double opportunity_cost(double forecast_balance, double toll, double sell_price, const MarketParams& sell,
                        double buy_price, const MarketParams& buy) {
  if (toll < 0.0) throw DomainError("opportunity_cost: negative toll");
  const double lr = sell.full_wallet();
  if (forecast_balance >= toll) return -selling_revenue(std::max(lr - toll, 0.0), sell_price, sell);
  const double x = std::min(forecast_balance, lr);
  return -selling_revenue(lr - x, sell_price, sell) + buying_cost(toll - x, buy_price, buy);
}

double pt_opportunity_cost(double price, const MarketParams& params) {
  return -selling_revenue(params.full_wallet(), price, params);
}

double money_utility(double income, double cost, double lambda, double gamma) {
  const double left = income - 2.0 * cost;
  if (lambda == 0.0) return left;
  const double arg = gamma + left;
  if (!(arg > 0.0)) throw DomainError("money_utility: log argument not positive");
  return left + lambda * std::log(arg);
}

double systematic_utility(const Traveler& t, const AlternativeAttributes& alt, double lambda, double gamma) {
  return -2.0 * t.vot * alt.forecast_tt - 2.0 * t.wait_value * alt.wait - t.sde_value * alt.sde -
         t.sdl_value * alt.sdl + money_utility(t.income, alt.expected_cost, lambda, gamma);
}

double systematic_car_utility(const Traveler& t, const AlternativeAttributes& alt, double lambda, double gamma) {
  return -2.0 * t.vot * alt.forecast_tt - t.sde_value * alt.sde - t.sdl_value * alt.sdl +
         money_utility(t.income, alt.expected_cost, lambda, gamma);
}

double systematic_pt_utility(const Traveler& t, const SupplyParams& supply, double cost, double lambda,
                             double gamma) {
  return -2.0 * t.vot * supply.pt_time - 2.0 * t.wait_value * supply.pt_wait +
         money_utility(t.income, cost, lambda, gamma);
}

double car_utility(const Traveler& t, const AlternativeAttributes& alt, double lambda, double gamma) {
  return systematic_car_utility(t, alt, lambda, gamma) + t.car_epsilon(alt.interval);
}

double pt_utility(const Traveler& t, const SupplyParams& supply, InstrumentKind kind, double price,
                  const MarketParams& market, double lambda, double gamma) {
  double cost = supply.pt_fare;
  if (kind == InstrumentKind::TMC) cost += pt_opportunity_cost(price, market);
  return systematic_pt_utility(t, supply, cost, lambda, gamma) + t.pt_epsilon();
}

int pt_departure_minute(const Traveler& t, const SupplyParams& supply) {
  const int m = static_cast<int>(std::floor(t.preferred_arrival - supply.pt_time));
  return std::clamp(m, 0, kDayMinutes - 1);
}

void build_choice_set(const Traveler& t, const ChoiceContext& ctx, std::vector<AlternativeAttributes>& out) {
  out.clear();
  const auto& supply = *ctx.supply;
  const InstrumentSpec& inst = *ctx.instrument;
  const bool tmc = inst.kind == InstrumentKind::TMC;
  if (tmc && !ctx.base_market) throw DomainError("build_choice_set: TMC context without market terms");

  const int first = std::max(t.first_interval, ctx.earliest_interval);
  for (int h = first; h <= t.last_interval; ++h) {
    AlternativeAttributes alt;
    alt.mode = Mode::car;
    alt.interval = h;
    alt.forecast_tt = ctx.tt_forecast[static_cast<std::size_t>(h)];
    const double th = interval_start(h);
    std::tie(alt.sde, alt.sdl) = schedule_delays(th, t.preferred_arrival, alt.forecast_tt, ctx.arrival_window);
    const double toll = inst.toll_for_interval(h);
    if (tmc) {
      const auto k = static_cast<std::size_t>(h - t.first_interval);
      const double balance = ctx.balance_at_interval.empty() ? ctx.base_market->full_wallet()
                                                             : ctx.balance_at_interval[k];
      if (ctx.day_terms.empty()) {
        alt.expected_cost = opportunity_cost(balance, toll, ctx.base_price, *ctx.base_market);
      } else {
        const auto& buy = ctx.day_terms[static_cast<std::size_t>(th)];
        alt.expected_cost =
            opportunity_cost(balance, toll, ctx.base_price, *ctx.base_market, buy.price, buy.params);
      }
      alt.expected_cost += supply.car_cost;
    } else {
      alt.expected_cost = toll + supply.car_cost;
    }
    alt.feasible = t.income - 2.0 * alt.expected_cost >= 0.0;
    if (alt.feasible) out.push_back(alt);
  }

  AlternativeAttributes pt;
  pt.mode = Mode::pt;
  pt.interval = interval_of(pt_departure_minute(t, supply));
  pt.forecast_tt = supply.pt_time;
  pt.wait = supply.pt_wait;
  pt.expected_cost = supply.pt_fare;
  if (tmc) pt.expected_cost += pt_opportunity_cost(ctx.base_price, *ctx.base_market);
  pt.feasible = t.income - 2.0 * pt.expected_cost >= 0.0;
  if (pt.feasible) out.push_back(pt);
  if (out.empty()) throw DomainError("build_choice_set: traveler " + std::to_string(t.id) + " can afford nothing");
}

std::vector<AlternativeAttributes> build_choice_set(const Traveler& t, const ChoiceContext& ctx) {
  std::vector<AlternativeAttributes> out;
  build_choice_set(t, ctx, out);
  return out;
}

Decision choose(const Traveler& t, std::span<const AlternativeAttributes> choice_set, double lambda,
                double gamma) {
  if (choice_set.empty()) throw DomainError("choose: empty choice set");
  double best = -INFINITY;
  Decision d;
  for (const auto& alt : choice_set) {
    const double eps = alt.mode == Mode::car ? t.car_epsilon(alt.interval) : t.pt_epsilon();
    const double u = systematic_utility(t, alt, lambda, gamma) + eps;
    if (u > best) {
      best = u;
      d = Decision{alt.mode, alt.interval};
    }
  }
  return d;
}

}  // namespace tmc
