#include "tmc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tmc/learning.hpp"

namespace tmc {

namespace {

constexpr double kLogFloor = 1e-9;

// Experienced money utility; the log argument is floored rather than thrown
// on because realized costs can exceed the forecast that passed the budget test.
double experienced_money(double income, double cost, double lambda, double gamma, bool& clamped) {
  const double left = income - 2.0 * cost;
  if (lambda == 0.0) return left;
  double arg = gamma + left;
  if (!(arg > kLogFloor)) {
    clamped = true;
    arg = kLogFloor;
  }
  return left + lambda * std::log(arg);
}

int clamp_minute(double m) { return std::clamp(static_cast<int>(std::lround(m)), 0, kDayMinutes - 1); }

int preferred_interval(const Traveler& t, double free_flow) { return interval_of(t.preferred_arrival - free_flow); }

MarketParams without_fees(MarketParams p) {
  p.fee_fixed_buy = p.fee_fixed_sell = p.fee_prop_buy = p.fee_prop_sell = 0.0;
  return p;
}

}  // namespace

void Scenario::validate() const {
  population.validate();
  market.validate();
  supply.validate();
  if (instrument.kind != InstrumentKind::NT) instrument.toll.validate();
  validate_interventions(interventions);
  if (!(theta_tt >= 0.0 && theta_tt <= 1.0)) throw ConfigError("learning.theta_tt", "must lie in [0, 1]");
  if (!(theta_dep >= 0.0 && theta_dep <= 1.0)) throw ConfigError("learning.theta_dep", "must lie in [0, 1]");
  if (!(lambda >= 0.0)) throw ConfigError("choice.lambda", "must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("choice.gamma", "must be positive");
  if (!(arrival_window >= 0.0)) throw ConfigError("choice.arrival_window", "must be >= 0");
  if (horizon < 1) throw ConfigError("learning.horizon", "must be >= 1");
  if (!(convergence_eps > 0.0)) throw ConfigError("learning.convergence_eps", "must be positive");
  if (convergence_window < 1) throw ConfigError("learning.convergence_window", "must be >= 1");
  if (!initial_tt.empty() && initial_tt.size() != static_cast<std::size_t>(kIntervals))
    throw ConfigError("initial.tt", "needs one value per interval (144)");
  for (double v : initial_tt)
    if (!(v >= 0.0)) throw ConfigError("initial.tt", "values must be >= 0");
}

int DayResult::car_trips() const {
  int n = 0;
  for (const auto& t : travelers) n += t.mode == Mode::car;
  return n;
}

double infinity_norm(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("infinity_norm: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Simulation::Simulation(Scenario scenario, std::shared_ptr<const Population> population)
    : scenario_(std::move(scenario)), population_(std::move(population)) {
  scenario_.validate();
  if (!population_) {
    population_ = std::make_shared<const Population>(
        synthesize_population(scenario_.population, scenario_.supply.free_flow));
  }
  Rng jitter = make_stream(scenario_.seed, "jitter");
  jitter_.resize(population_->size());
  for (int& j : jitter_) j = static_cast<int>(uniform01(jitter) * kIntervalMinutes);
  state_ = initial_state();
}

SimulationState Simulation::initial_state() const {
  SimulationState s;
  s.day = 0;
  s.price = scenario_.market.initial_price;
  s.tt_forecast = scenario_.initial_tt.empty() ? std::vector<double>(kIntervals, scenario_.supply.free_flow)
                                               : scenario_.initial_tt;
  const auto& pop = *population_;
  s.dep_forecast.resize(pop.size());
  for (std::size_t n = 0; n < pop.size(); ++n)
    s.dep_forecast[n] = interval_start(preferred_interval(pop[n], scenario_.supply.free_flow)) + 0.5 * kIntervalMinutes;
  s.balance.assign(pop.size(), 0.0);
  if (scenario_.instrument.kind == InstrumentKind::TMC &&
      scenario_.market.allocation_mode == AllocationMode::continuous) {
    const double lr = scenario_.market.full_wallet();
    Rng wallets = make_stream(scenario_.seed, "wallets");
    for (double& x : s.balance) {
      switch (scenario_.initial_wallets) {
        case InitialWallets::uniform: x = uniform01(wallets) * lr; break;
        case InitialWallets::full: x = lr; break;
        case InitialWallets::empty: x = 0.0; break;
      }
    }
  }
  return s;
}

void Simulation::set_state(SimulationState state) {
  if (state.tt_forecast.size() != static_cast<std::size_t>(kIntervals) ||
      state.dep_forecast.size() != population_->size() || state.balance.size() != population_->size())
    throw DomainError("Simulation::set_state: state does not match the population");
  state_ = std::move(state);
}

DayResult Simulation::run_day() const {
  const Scenario& sc = scenario_;
  const Population& pop = *population_;
  const SupplyParams& supply = sc.supply;
  const MarketParams& base = sc.market;
  const int day = state_.day;
  const std::size_t n_trav = pop.size();
  const bool tmc = sc.instrument.kind == InstrumentKind::TMC;
  const bool lump = tmc && base.allocation_mode == AllocationMode::lump_sum;
  const double price = state_.price;
  const double lr = base.full_wallet();
  const MarketParams redeem = without_fees(base);
  const MarketParams& sell_side = lump ? redeem : base;

  std::vector<double> toll(kIntervals);
  for (int h = 0; h < kIntervals; ++h) toll[static_cast<std::size_t>(h)] = sc.instrument.toll_for_interval(h);

  std::vector<MarketIntervention> today;
  for (const auto& iv : sc.interventions)
    if (iv.day < 0 || iv.day == day) today.push_back(iv);
  std::vector<MarketTerms> terms;
  if (tmc && !today.empty()) terms = build_day_market(day, price, base, today);
  auto terms_at = [&](int t) -> const MarketTerms& {
    static thread_local MarketTerms scratch;
    if (!terms.empty()) return terms[static_cast<std::size_t>(t)];
    scratch.price = price;
    scratch.params = base;
    return scratch;
  };

  std::vector<int> jitter_today;
  const std::vector<int>* jitter = &jitter_;
  if (sc.daily_jitter) {
    Rng rng = make_stream(sc.seed, "jitter", static_cast<std::uint64_t>(day) + 1);
    jitter_today.resize(n_trav);
    for (int& j : jitter_today) j = static_cast<int>(uniform01(rng) * kIntervalMinutes);
    jitter = &jitter_today;
  }

  DayResult r;
  r.instrument = sc.instrument.kind;
  r.day = day;
  r.price = price;
  r.travelers.resize(n_trav);

  ChoiceContext ctx;
  ctx.instrument = &sc.instrument;
  ctx.supply = &supply;
  ctx.tt_forecast = state_.tt_forecast;
  ctx.lambda = sc.lambda;
  ctx.gamma = sc.gamma;
  ctx.arrival_window = sc.arrival_window;
  ctx.base_market = &sell_side;
  ctx.base_price = price;

  std::vector<AlternativeAttributes> choice_set;
  std::vector<double> balance_path(kDayMinutes + 1);
  std::vector<double> window_balance;

  auto place = [&](std::size_t n, const Decision& d, TravelerDay& td) {
    td.mode = d.mode;
    if (d.mode == Mode::car) {
      td.interval = d.interval;
      td.departure = d.interval * kIntervalMinutes + (*jitter)[n];
    } else {
      td.departure = pt_departure_minute(pop[n], supply);
      td.interval = interval_of(td.departure);
    }
  };

  // Pre-day choice against the morning's forecasts (interventions unannounced).
  for (std::size_t n = 0; n < n_trav; ++n) {
    const Traveler& t = pop[n];
    window_balance.clear();
    if (tmc) {
      if (lump) {
        window_balance.assign(static_cast<std::size_t>(t.window_size()), lr);
      } else {
        const int dep = clamp_minute(state_.dep_forecast[n]);
        const double dep_toll = toll[static_cast<std::size_t>(interval_of(dep))];
        const std::size_t span = static_cast<std::size_t>(t.last_interval * kIntervalMinutes + 1);
        forecast_balance(state_.balance[n], dep, dep_toll, price, base, std::span<double>(balance_path.data(), span));
        for (int h = t.first_interval; h <= t.last_interval; ++h)
          window_balance.push_back(balance_path[static_cast<std::size_t>(h * kIntervalMinutes)]);
      }
    }
    ctx.balance_at_interval = window_balance;
    build_choice_set(t, ctx, choice_set);
    place(n, choose(t, choice_set, sc.lambda, sc.gamma), r.travelers[n]);
  }

  // Within-day token trading, traveler by traveler (accounts are independent).
  if (tmc) {
    std::vector<SellingRule> rules;
    if (terms.empty()) {
      rules.emplace_back(price, base);
    } else {
      for (const auto& term : terms) rules.emplace_back(term.price, term.params);
    }
    TokenTotals& tot = r.tokens;
    for (std::size_t n = 0; n < n_trav; ++n) {
      const Traveler& t = pop[n];
      TravelerDay& td = r.travelers[n];
      Wallet w{static_cast<int>(n), lump ? 0.0 : state_.balance[n]};
      tot.start_balance += w.balance;
      if (lump) {
        w.balance = lr;
        tot.allocated += lr;
      }
      double cash = 0.0;
      auto tomorrow = [&]() {
        const double next = smooth(state_.dep_forecast[n], td.departure, sc.theta_dep);
        const double tt = td.mode == Mode::car ? toll[static_cast<std::size_t>(interval_of(next))] : 0.0;
        return std::pair<double, double>{next + kDayMinutes, tt};
      };
      auto [next_dep, next_toll] = tomorrow();

      for (int m = 0; m < kDayMinutes; ++m) {
        const MarketTerms& term = terms_at(m);
        // Announcement of an intervention: travelers still at home re-plan.
        if (!today.empty() && m <= td.departure) {
          for (const auto& iv : today) {
            if (static_cast<int>(std::ceil(iv.start)) != m) continue;
            ChoiceContext re = ctx;
            re.day_terms = terms;
            re.earliest_interval = interval_of(m) + (m % kIntervalMinutes ? 1 : 0);
            window_balance.clear();
            for (int h = t.first_interval; h <= t.last_interval; ++h) {
              double x = w.balance;
              if (!lump) {
                for (int k = m; k < h * kIntervalMinutes; ++k) x = std::min(x + terms_at(k).params.allocation_rate, lr);
              }
              window_balance.push_back(x);
            }
            re.balance_at_interval = window_balance;
            build_choice_set(t, re, choice_set);
            const Decision d = choose(t, choice_set, sc.lambda, sc.gamma);
            const Mode old_mode = td.mode;
            const int old_dep = td.departure;
            place(n, d, td);
            if (td.departure < m) td.departure = m;  // PT rider whose usual train has left
            if (td.mode != old_mode || td.departure != old_dep) {
              td.replanned = true;
              ++r.replanned;
            }
            std::tie(next_dep, next_toll) = tomorrow();
          }
        }

        AccountAction action = AccountAction::idle();
        if (m == td.departure) {
          double due = td.mode == Mode::car ? toll[static_cast<std::size_t>(td.interval)] : 0.0;
          if (due > w.balance) {
            const double cost = buying_cost(due - w.balance, term.price, term.params);
            if (t.income - 2.0 * (supply.car_cost + cash + cost) < 0.0) {
              td.mode = Mode::pt;
              td.forced_pt = true;
              ++r.forced_pt;
              due = 0.0;
              std::tie(next_dep, next_toll) = tomorrow();
            }
          }
          action = AccountAction::travel(due);
        } else if (!lump) {
          const bool before = m < td.departure;
          const double nd = before ? td.departure : next_dep;
          const double nt = before ? (td.mode == Mode::car ? toll[static_cast<std::size_t>(td.interval)] : 0.0)
                                   : next_toll;
          if (rules[terms.empty() ? 0 : static_cast<std::size_t>(m)].sell(w.balance, m, nd, nt))
            action = AccountAction::sell_all();
        }
        if (action.kind == AccountAction::Kind::idle && !lump) {
          const double rate = term.params.allocation_rate;
          const double raw = w.balance + rate;
          w.balance = std::min(raw, lr);
          tot.allocated += rate;
          tot.expired += raw - w.balance;
          continue;
        }
        const StepOutcome o = step_account(w, action, term.params);
        if (o.bought > 0.0) {
          const double cost = buying_cost(o.bought, term.price, term.params);
          cash += cost;
          r.transactions.push_back({day, m, static_cast<int>(n), TxKind::buy, o.bought, cost});
        }
        if (action.kind == AccountAction::Kind::sell_all) {
          const double rev = selling_revenue(o.sold, term.price, term.params);
          cash -= rev;
          r.transactions.push_back({day, m, static_cast<int>(n), TxKind::sell, o.sold, rev});
        }
        tot.allocated += o.accrued;
        tot.spent += o.spent;
        tot.bought += o.bought;
        tot.sold += o.sold;
        tot.expired += o.expired;
        w = o.wallet;
      }
      if (lump && w.balance > 0.0) {
        const double rev = selling_revenue(w.balance, price, redeem);
        cash -= rev;
        tot.sold += w.balance;
        r.transactions.push_back({day, kDayMinutes - 1, static_cast<int>(n), TxKind::sell, w.balance, rev});
        w.balance = 0.0;
      }
      tot.end_balance += w.balance;
      td.end_balance = w.balance;
      td.token_cash = cash;
    }
  }

  // Bottleneck: vehicles enter at their departure minute, FIFO by traveler id.
  std::vector<std::vector<int>> entering(kDayMinutes);
  for (std::size_t n = 0; n < n_trav; ++n) {
    const auto& td = r.travelers[n];
    if (td.mode == Mode::car) entering[static_cast<std::size_t>(td.departure)].push_back(static_cast<int>(n));
  }
  Bottleneck queue(supply, day);
  std::vector<double> delays;
  for (int m = 0; m < kDayMinutes || queue.state().queue_len > 0; ++m) {
    delays.clear();
    std::span<const int> ids;
    if (m < kDayMinutes) ids = entering[static_cast<std::size_t>(m)];
    queue.enqueue(m, ids, &delays);
    for (std::size_t k = 0; k < ids.size(); ++k)
      r.travelers[static_cast<std::size_t>(ids[k])].travel_time = supply.free_flow + delays[k];
    r.queue.push_back(queue.state().queue_len);
  }

  // Realized flows, travel times, experienced utilities and revenues.
  r.car_departures.assign(kIntervals, 0);
  r.pt_departures.assign(kIntervals, 0);
  std::vector<int> car_intervals;
  std::vector<double> car_tt;
  for (std::size_t n = 0; n < n_trav; ++n) {
    const Traveler& t = pop[n];
    TravelerDay& td = r.travelers[n];
    bool clamped = false;
    double time_terms = 0.0;
    double eps = 0.0;
    if (td.mode == Mode::car) {
      ++r.car_departures[static_cast<std::size_t>(td.interval)];
      car_intervals.push_back(td.interval);
      car_tt.push_back(td.travel_time);
      std::tie(td.sde, td.sdl) = schedule_delays(td.departure, t.preferred_arrival, td.travel_time, sc.arrival_window);
      td.money_cost = supply.car_cost;
      if (sc.instrument.kind == InstrumentKind::CP) {
        td.toll = toll[static_cast<std::size_t>(td.interval)];
        td.money_cost += td.toll;
        r.toll_revenue += td.toll;
      }
      time_terms = -2.0 * t.vot * td.travel_time - t.sde_value * td.sde - t.sdl_value * td.sdl;
      eps = td.interval >= t.first_interval && td.interval <= t.last_interval ? t.car_epsilon(td.interval) : 0.0;
    } else {
      ++r.pt_departures[static_cast<std::size_t>(td.interval)];
      td.travel_time = supply.pt_time;
      td.money_cost = supply.pt_fare;
      r.fare_revenue += supply.pt_fare;
      time_terms = -2.0 * t.vot * supply.pt_time - 2.0 * t.wait_value * supply.pt_wait;
      eps = t.pt_epsilon();
    }
    td.money_cost += td.token_cash;
    r.token_revenue += td.token_cash;
    td.utility = time_terms + experienced_money(t.income, td.money_cost, sc.lambda, sc.gamma, clamped) + eps;
    r.clamped_utilities += clamped;
  }
  r.interval_tt = interval_travel_times(car_intervals, car_tt, supply.free_flow);
  return r;
}

double Simulation::advance(const DayResult& day) {
  if (day.day != state_.day) throw DomainError("Simulation::advance: result belongs to another day");
  const std::vector<double> prev = state_.tt_forecast;
  smooth(state_.tt_forecast, day.interval_tt, scenario_.theta_tt);
  for (std::size_t n = 0; n < state_.dep_forecast.size(); ++n) {
    state_.dep_forecast[n] = smooth(state_.dep_forecast[n], day.travelers[n].departure, scenario_.theta_dep);
    state_.balance[n] = day.travelers[n].end_balance;
  }
  if (scenario_.instrument.kind == InstrumentKind::TMC)
    state_.price = next_price(state_.price, day.token_revenue, scenario_.market);
  ++state_.day;
  return infinity_norm(prev, state_.tt_forecast);
}

EquilibriumResult Simulation::run_to_equilibrium() {
  EquilibriumResult res;
  const int window = scenario_.convergence_window;
  int streak = 0;
  for (int d = 0; d < scenario_.horizon; ++d) {
    DayResult day = run_day();
    const double price_before = state_.price;
    const double norm = advance(day);
    const bool price_moved = state_.price != price_before;
    res.norms.push_back(norm);
    res.prices.push_back(day.price);
    res.token_revenues.push_back(day.token_revenue);
    res.window.push_back(std::move(day));
    if (static_cast<int>(res.window.size()) > window) res.window.erase(res.window.begin());
    ++res.days_run;
    streak = (norm <= scenario_.convergence_eps && !price_moved) ? streak + 1 : 0;
    if (streak >= window) {
      res.converged = true;
      break;
    }
  }
  res.final_state = state_;
  return res;
}

EquilibriumResult run_to_equilibrium(const Scenario& scenario) {
  Simulation sim(scenario);
  return sim.run_to_equilibrium();
}

Scenario inject_event(const Scenario& scenario, const CapacityOverride& event) {
  if (event.day < 0 || event.day >= scenario.horizon)
    throw ConfigError("events.capacity", "event day outside the horizon");
  Scenario out = scenario;
  out.supply.overrides.push_back(event);
  out.supply.validate();
  return out;
}

Scenario inject_event(const Scenario& scenario, const MarketIntervention& event) {
  if (event.day >= scenario.horizon) throw ConfigError("events.interventions", "event day outside the horizon");
  Scenario out = scenario;
  out.interventions.push_back(event);
  validate_interventions(out.interventions);
  return out;
}

}  // namespace tmc
