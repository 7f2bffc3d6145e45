// Acceptance checks, one per invocation: `acceptance <n>` prints a single
// PASS/FAIL line and exits 0 on pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "tmc/experiments.hpp"
#include "tmc/metrics.hpp"
#include "tmc/optimizer.hpp"
#include "tmc/scenario_io.hpp"
#include "tmc/supply.hpp"

using namespace tmc;

namespace {

// Tolerances pinned from the criteria.
constexpr double kOracleTol = 1e-9;
constexpr double kScheduleTol = 1e-9;
constexpr double kNormEps = 0.01;
constexpr int kNtDayLimit = 100;
constexpr double kNtAgreeMin = 0.5;
constexpr double kPriceAgree = 0.05;
constexpr double kRevenueBand = 300.0;
constexpr double kPriceLow = 1.1, kPriceHigh = 0.9, kPriceTol = 0.05;
constexpr double kFeeWelfareLoss = 0.02;
constexpr double kElasticityTol = 0.06;
constexpr double kTtiTarget = 1.68, kTtiTol = 0.08;
constexpr double kOptAgree = 0.005;
constexpr double kSphereTol = 1e-3;

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  return pass ? 0 : 1;
}

ScenarioFile load(const char* name) { return load_scenario(std::filesystem::path(SCENARIO_DIR) / name); }

std::shared_ptr<const Population> population_of(const Scenario& s) {
  return std::make_shared<const Population>(synthesize_population(s.population, s.supply.free_flow));
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }
double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
}

// --- 1: selling rule against an exhaustive single-sale search -------------

struct SaleInstance {
  double balance, toll, price;
  int horizon;  // departure minute, decisions run over [0, horizon]
  MarketParams params;
};

int criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_stream(2024, "oracle");
  const double fees[3] = {0.0, 0.05, 0.1};
  auto fee = [&] { return fees[rng() % 3]; };
  int worse = 0;
  double worst = 0.0;
  SaleInstance example{};
  for (int k = 0; k < 10000; ++k) {
    SaleInstance in;
    in.params.fee_fixed_sell = fee();
    in.params.fee_fixed_buy = fee();
    in.params.fee_prop_sell = fee();
    in.params.fee_prop_buy = fee();
    in.horizon = 1 + static_cast<int>(rng() % 720);
    in.balance = uniform01(rng) * in.params.full_wallet();
    in.toll = uniform01(rng) * 3.0;
    in.price = 0.5 + 1.5 * uniform01(rng);

    // Best single sale on the grid, the wallet accruing untouched until then.
    double oracle = -1e300;
    Wallet w{0, in.balance};
    for (int m = 0; m <= in.horizon; ++m) {
      oracle = std::max(oracle, conditional_profit(w, m, in.horizon, in.toll, in.price, in.params));
      w = step_account(w, AccountAction::idle(), in.params).wallet;
    }

    // The rule's first sale (none: nothing gained).
    double cash = 0.0;
    Wallet a{0, in.balance};
    for (int m = 0; m <= in.horizon; ++m) {
      if (selling_decision(a, m, in.horizon, in.toll, in.price, in.params) == SellDecision::sell_now) {
        cash = conditional_profit(a, m, in.horizon, in.toll, in.price, in.params);
        break;
      }
      a = step_account(a, AccountAction::idle(), in.params).wallet;
    }

    if (cash < oracle - kOracleTol) {
      ++worse;
      if (oracle - cash > worst) {
        worst = oracle - cash;
        example = in;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string detail = std::to_string(worse) + "/10000 instances below the oracle";
  if (worse > 0)
    detail += ", worst gap $" + fmt("%.4f", worst) + " (x=" + fmt("%.3f", example.balance) +
              ", T=" + fmt("%.3f", example.toll) + ", horizon=" + std::to_string(example.horizon) +
              ", F_B^F=" + fmt("%.2f", example.params.fee_fixed_buy) + ")";
  detail += ", " + fmt("%.1f s", secs);
  return report(1, worse == 0 && secs < 60.0, detail);
}

// --- 2: zero-fee schedules ---------------------------------------------------

int criterion2() {
  MarketParams p;
  const double price = 1.3, toll = 1.5, start = 0.5;
  const int departure = 480;
  Rng rng = make_stream(7, "schedules");
  std::vector<double> revenue;
  int rejected = 0;
  for (int k = 0; k < 2000; ++k) {
    std::vector<bool> sell(kDayMinutes, false);
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) sell[rng() % (kDayMinutes - 1)] = true;
    sell[kDayMinutes - 1] = true;  // common terminal balance
    Wallet w{0, start};
    double cash = 0.0, expired = 0.0;
    for (int m = 0; m < kDayMinutes; ++m) {
      AccountAction act = m == departure ? AccountAction::travel(toll)
                          : sell[static_cast<std::size_t>(m)] ? AccountAction::sell_all()
                                                              : AccountAction::idle();
      const StepOutcome o = step_account(w, act, p);
      cash += selling_revenue(o.sold, price, p);
      if (o.bought > 0.0) cash -= buying_cost(o.bought, price, p);
      expired += o.expired;
      w = o.wallet;
    }
    if (expired > 0.0) {  // hoarding: accrual lost at the cap
      ++rejected;
      continue;
    }
    revenue.push_back(cash);
  }
  const auto [lo, hi] = std::minmax_element(revenue.begin(), revenue.end());
  return report(2, revenue.size() > 100 && *hi - *lo <= kScheduleTol,
                std::to_string(revenue.size()) + " hoarding-free schedules, revenue spread " +
                    fmt("%.2e", *hi - *lo) + " (" + std::to_string(rejected) + " hoarding schedules skipped)");
}

// --- 3: NT convergence from four starts -------------------------------------

int criterion3() {
  const ScenarioFile f = load("nt.json");
  const auto pop = population_of(f.scenario);
  auto run_from = [&](const std::vector<double>& tt) {
    Scenario s = f.scenario;
    s.initial_tt = tt;
    return Simulation(s, pop).run_to_equilibrium();
  };
  const EquilibriumResult free = run_from({});
  const std::vector<double> saved = free.final_state.tt_forecast;
  std::vector<double> scaled(saved), flat(kIntervals, 30.0);
  for (double& x : scaled) x *= 0.6;
  const EquilibriumResult runs[4] = {free, run_from(saved), run_from(scaled), run_from(flat)};
  const char* names[4] = {"free-flow", "saved", "0.6x", "30 min"};
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 4; ++k) {
    const auto& n = runs[k].norms;
    const auto hit = std::find_if(n.begin(), n.end(), [](double v) { return v <= kNormEps; });
    const int day = hit == n.end() ? -1 : static_cast<int>(hit - n.begin()) + 1;
    const double dev = infinity_norm(runs[k].final_state.tt_forecast, saved);
    ok = ok && day > 0 && day <= kNtDayLimit && runs[k].converged && dev <= kNtAgreeMin;
    detail += std::string(k ? "; " : "") + names[k] + ": norm<=0.01 on day " + std::to_string(day) +
              ", max |dtt| " + fmt("%.3f", dev);
  }
  return report(3, ok, detail);
}

// --- 4: price paths from three initial prices -------------------------------

int criterion4() {
  const ScenarioFile f = load("tmc.json");
  const auto pop = population_of(f.scenario);
  const double starts[3] = {0.5, 1.0, 1.5};
  std::vector<double> finals;
  bool ok = true;
  double worst_k = 0.0;
  std::string detail;
  for (double p0 : starts) {
    Scenario s = f.scenario;
    s.market.initial_price = p0;
    const EquilibriumResult eq = Simulation(s, pop).run_to_equilibrium();
    for (const auto& d : eq.window) worst_k = std::max(worst_k, std::fabs(d.token_revenue));
    ok = ok && eq.converged;
    finals.push_back(eq.final_state.price);
    detail += fmt("p0=%.1f", p0) + fmt(" -> %.2f", eq.final_state.price) + (eq.converged ? "" : " (unconverged)") +
              "; ";
  }
  const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
  ok = ok && *hi - *lo <= kPriceAgree + 1e-9 && worst_k <= kRevenueBand;
  return report(4, ok, detail + fmt("max |K| on converged days %.0f", worst_k));
}

// --- 5: allocation rate +-15% -----------------------------------------------

int criterion5() {
  const ScenarioFile f = load("tmc.json");
  const auto pop = population_of(f.scenario);
  auto price_at = [&](double mult, bool& converged) {
    Scenario s = f.scenario;
    s.market.allocation_rate *= mult;
    const EquilibriumResult eq = Simulation(s, pop).run_to_equilibrium();
    converged = eq.converged;
    double sum = 0.0;
    for (const auto& d : eq.window) sum += d.price;
    return sum / eq.window.size();
  };
  bool c_low = false, c_high = false;
  const double low = price_at(0.85, c_low), high = price_at(1.15, c_high);
  const bool ok = std::fabs(low - kPriceLow) <= kPriceTol && std::fabs(high - kPriceHigh) <= kPriceTol;
  return report(5, ok,
                fmt("r-15%%: price %.2f", low) + (c_low ? "" : " (unconverged)") + fmt(" (target 1.1); r+15%%: %.2f", high) +
                    (c_high ? "" : " (unconverged)") + " (target 0.9)");
}

// --- 6: fixed fees remove buyback -------------------------------------------

int criterion6() {
  const ScenarioFile f = load("tmc.json");
  const auto pop = population_of(f.scenario);
  const EquilibriumResult nt = Simulation(as_instrument(f.scenario, InstrumentKind::NT), pop).run_to_equilibrium();
  const InstrumentOutcome free = evaluate(f.scenario, pop, &nt);
  Scenario fee = f.scenario;
  fee.market.fee_fixed_buy = fee.market.fee_fixed_sell = 0.05;
  const InstrumentOutcome paid = evaluate(fee, pop, &nt);
  const double loss = (free.welfare.social_welfare - paid.welfare.social_welfare) / std::fabs(free.welfare.social_welfare);
  const bool ok = free.welfare.buyback_fraction > 0.0 && paid.welfare.buyback_fraction == 0.0 && loss <= kFeeWelfareLoss;
  return report(6, ok,
                fmt("zero fees: buyback fraction %.4f", free.welfare.buyback_fraction) +
                    fmt(", SW %.0f", free.welfare.social_welfare) +
                    fmt("; F^F=0.05: buyback fraction %.4f", paid.welfare.buyback_fraction) +
                    fmt(", SW %.0f", paid.welfare.social_welfare) + fmt(", loss %.2f%%", 100 * loss));
}

// --- 7: CP and TMC without income effects -------------------------------------

int criterion7() {
  const ScenarioFile cp = load("cp.json"), tm = load("tmc.json");
  std::vector<double> sw_cp(5), sw_tmc(5);
  std::string prices;
  for (int k = 0; k < 5; ++k) {
    const std::uint64_t seed = cp.seeds.at(static_cast<std::size_t>(k));
    Scenario t = tm.scenario, c = cp.scenario;
    for (Scenario* s : {&t, &c}) {
      s->lambda = 0.0;
      s->seed = seed;
      s->population.seed = seed;
    }
    const auto pop = population_of(t);
    const EquilibriumResult nt = Simulation(as_instrument(t, InstrumentKind::NT), pop).run_to_equilibrium();
    const InstrumentOutcome ot = evaluate(t, pop, &nt);
    const double p = ot.welfare.mean_price;
    for (std::size_t i = 0; i < 5; ++i) c.instrument.toll.levels[i] = t.instrument.toll.levels[i] * p;
    const InstrumentOutcome oc = evaluate(c, pop, &nt);
    sw_tmc[static_cast<std::size_t>(k)] = ot.welfare.social_welfare;
    sw_cp[static_cast<std::size_t>(k)] = oc.welfare.social_welfare;
    prices += fmt(k ? ",%.2f" : "%.2f", p);
  }
  const double gap = std::fabs(mean(sw_tmc) - mean(sw_cp));
  const double se = std::sqrt((sd(sw_tmc) * sd(sw_tmc) + sd(sw_cp) * sd(sw_cp)) / 5.0);
  return report(7, gap <= se,
                fmt("mean SW TMC %.1f", mean(sw_tmc)) + fmt(", CP %.1f", mean(sw_cp)) + fmt(", gap %.1f", gap) +
                    fmt(", 5-seed SE %.1f", se) + " (prices " + prices + ")");
}

// --- 8: Gini ordering ----------------------------------------------------------

int criterion8() {
  const ScenarioFile cp = load("cp.json"), tm = load("tmc.json");
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 5; ++k) {
    const std::uint64_t seed = cp.seeds.at(static_cast<std::size_t>(k));
    Scenario t = tm.scenario, c = cp.scenario;
    t.market.fee_fixed_buy = t.market.fee_fixed_sell = 0.05;
    for (Scenario* s : {&t, &c}) {
      s->seed = seed;
      s->population.seed = seed;
    }
    const auto pop = population_of(t);
    const EquilibriumResult nt = Simulation(as_instrument(t, InstrumentKind::NT), pop).run_to_equilibrium();
    const double g_nt = compute_welfare(nt, nt, *pop, t.supply.free_flow).gini;
    const double g_tmc = evaluate(t, pop, &nt).welfare.gini;
    const double g_cp = evaluate(c, pop, &nt).welfare.gini;
    ok = ok && g_tmc < g_nt && g_nt < g_cp;
    detail += fmt(k ? "; TMC %.4f" : "TMC %.4f", g_tmc) + fmt(" NT %.4f", g_nt) + fmt(" CP %.4f", g_cp);
  }
  return report(8, ok, detail);
}

// --- 9: elasticities --------------------------------------------------------------

int criterion9() {
  const ScenarioFile cp = load("cp.json");
  const auto rows = elasticity_table(cp.scenario, {0.0, 2.5, 5.0});
  const double target[3] = {-0.19, -0.38, -0.53};
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < 3; ++i) {
    ok = ok && std::fabs(rows[i].total - target[i]) <= kElasticityTol;
    detail += fmt(i ? "; toll %.1f" : "toll %.1f", rows[i].toll) + fmt(": %.3f", rows[i].total) +
              fmt(" (target %.2f)", target[i]);
  }
  return report(9, ok, detail);
}

// --- 10: congestion level --------------------------------------------------------

int criterion10() {
  const ScenarioFile nt = load("nt.json");
  const EquilibriumResult eq = run_to_equilibrium(nt.scenario);
  const auto t = tti(std::span<const DayResult>(eq.window), nt.scenario.supply.free_flow);
  const bool ok = eq.converged && t && std::fabs(*t - kTtiTarget) <= kTtiTol;
  return report(10, ok, fmt("NT TTI %.3f (target 1.68 +- 0.08)", t ? *t : 0.0));
}

// --- 11: optimizer repeatability ----------------------------------------------------

int criterion11() {
  const DEResult sphere = sphere_self_test(sphere_config());
  const double dist = std::sqrt(-sphere.best_fitness);

  // A tenth-scale network keeps three searches inside the test budget.
  ScenarioFile f = load("cp.json");
  Scenario s = f.scenario;
  s.population.n_travelers = 1500;
  s.supply.capacity = 7.8;
  const auto pop = population_of(s);
  const EquilibriumResult nt = Simulation(as_instrument(s, InstrumentKind::NT), pop).run_to_equilibrium();
  std::vector<double> sw;
  for (std::uint64_t seed : {1, 2, 3}) {
    DEConfig c;
    c.bounds = default_toll_bounds();
    c.max_generations = 500;  // reference budget
    c.seed = seed;
    sw.push_back(optimize_toll(s, c, pop, &nt, &nt.final_state).welfare);
  }
  const auto [lo, hi] = std::minmax_element(sw.begin(), sw.end());
  const double spread = (*hi - *lo) / std::fabs(*hi);
  const bool ok = spread <= kOptAgree && dist <= kSphereTol;
  return report(11, ok,
                fmt("CP welfare from 3 initial populations %.1f", sw[0]) + fmt(", %.1f", sw[1]) +
                    fmt(", %.1f", sw[2]) + fmt(" (spread %.3f%%)", 100 * spread) +
                    fmt("; sphere distance %.2e", dist));
}

// --- 12: robustness ------------------------------------------------------------------

int criterion12() {
  const ScenarioFile cp = load("cp.json"), tm = load("tmc.json");
  const double r_base = tm.scenario.market.allocation_rate;

  // Forecast error: the toll was tuned for 39 veh/min, the road delivers 15% less.
  Scenario c = cp.scenario, t = tm.scenario;
  c.supply.capacity *= 0.85;
  t.supply.capacity *= 0.85;
  const auto pop = population_of(c);
  const EquilibriumResult nt = Simulation(as_instrument(c, InstrumentKind::NT), pop).run_to_equilibrium();
  const double sw_cp = evaluate(c, pop, &nt).welfare.social_welfare;
  std::vector<double> grid;
  const double step = 0.05;
  for (double m = 0.60; m <= 1.15 + 1e-9; m += step) grid.push_back(m * r_base);
  const GridSearchResult g = grid_search_allocation(t, grid, pop, &nt);
  const bool fe_ok = g.best_welfare > sw_cp && std::fabs(g.best_rate - 0.85 * r_base) <= step * r_base + 1e-12;

  // Non-recurrent event on day 10 after each instrument has settled.
  const auto base_pop = population_of(cp.scenario);
  const CapacityOverride drop{10, 420, 510, 0.85};
  auto settle_and_hit = [&](const Scenario& s) {
    const EquilibriumResult eq = Simulation(s, base_pop).run_to_equilibrium();
    return event_day(inject_event(s, drop), eq.final_state, 10, base_pop);
  };
  Scenario cont = tm.scenario;
  Scenario lump = tm.scenario;
  lump.market.allocation_mode = AllocationMode::lump_sum;
  const DayResult d_nt = settle_and_hit(as_instrument(cp.scenario, InstrumentKind::NT));
  const DayResult d_cp = settle_and_hit(cp.scenario);

  MarketIntervention cont_iv;
  cont_iv.day = 10;
  cont_iv.start = 425;
  cont_iv.end = 530;
  cont_iv.price = 1.25;
  cont_iv.rate = 0.0;
  cont_iv.fee_fixed = 0.5;
  MarketIntervention lump_iv;
  lump_iv.day = 10;
  lump_iv.start = 415;
  lump_iv.end = 555;
  lump_iv.price = 1.8;
  auto settle_intervene = [&](const Scenario& s, const MarketIntervention& iv) {
    const EquilibriumResult eq = Simulation(s, base_pop).run_to_equilibrium();
    return event_day(inject_event(inject_event(s, drop), iv), eq.final_state, 10, base_pop);
  };
  const DayResult d_cont = settle_intervene(cont, cont_iv);
  const DayResult d_lump = settle_intervene(lump, lump_iv);
  auto sw = [&](const DayResult& d) {
    return compute_welfare(std::span<const DayResult>(&d, 1), std::span<const DayResult>(&d_nt, 1), *base_pop,
                           cp.scenario.supply.free_flow)
        .social_welfare;
  };
  const double e_cont = sw(d_cont), e_lump = sw(d_lump), e_cp = sw(d_cp);
  const bool ev_ok = e_cont > e_lump && e_lump > e_cp;

  std::string detail = fmt("forecast error: CP SW %.0f", sw_cp) + fmt(", TMC best SW %.0f", g.best_welfare) +
                       fmt(" at %.3f r_base", g.best_rate / r_base) + "; event day SW: " +
                       fmt("continuous TMC %.0f", e_cont) + fmt(", lump-sum TMC %.0f", e_lump) + fmt(", CP %.0f", e_cp);
  return report(12, fe_ok && ev_ok, detail);
}

// --- 13: structural invariants -------------------------------------------------------

int criterion13() {
  std::vector<std::string> broken;

  // Supply: FIFO and conservation under random arrivals and a capacity drop.
  {
    SupplyParams sp;
    sp.capacity = 3.9;
    sp.overrides.push_back({0, 100, 160, 0.5});
    Bottleneck b(sp, 0);
    Rng rng = make_stream(5, "fifo");
    int next_id = 0;
    for (int m = 0; m < kDayMinutes; ++m) {
      std::vector<int> ids(rng() % 9);
      for (int& id : ids) id = next_id++;
      const QueueState& q = b.enqueue(m, ids);
      if (q.cumulative_departures != q.cumulative_arrivals + q.queue_len) broken.push_back("queue conservation");
    }
    const auto& order = b.discharge_order();
    if (!std::is_sorted(order.begin(), order.end())) broken.push_back("FIFO");
  }

  // Market and engine: wallet bounds, token conservation, determinism.
  Scenario s;
  s.population.n_travelers = 750;
  s.supply.capacity = 3.9;
  s.instrument.kind = InstrumentKind::TMC;
  s.instrument.toll.levels = {0.5, 1.5, 3.0, 1.5, 0.5};
  s.instrument.toll.breakpoints = {390, 420, 450, 480, 510, 540};
  s.market.fee_fixed_buy = s.market.fee_fixed_sell = 0.05;
  s.horizon = 40;
  {
    Simulation sim(s);
    for (int d = 0; d < 10; ++d) {
      const DayResult r = sim.run_day();
      const TokenTotals& t = r.tokens;
      const double lhs = t.start_balance + t.allocated + t.bought;
      const double rhs = t.end_balance + t.spent + t.sold + t.expired;
      if (std::fabs(lhs - rhs) > 1e-6 * std::max(1.0, lhs)) broken.push_back("token conservation");
      for (const auto& tr : r.travelers)
        if (tr.end_balance < -1e-12 || tr.end_balance > s.market.full_wallet() + 1e-9) broken.push_back("wallet bounds");
      sim.advance(r);
    }
  }
  const EquilibriumResult a = run_to_equilibrium(s), b = run_to_equilibrium(s);
  if (a.norms != b.norms || a.prices != b.prices || a.token_revenues != b.token_revenues ||
      a.final_state.balance != b.final_state.balance)
    broken.push_back("determinism");

  // Metrics: SW = Z + K.
  const auto pop = population_of(s);
  const EquilibriumResult nt = Simulation(as_instrument(s, InstrumentKind::NT), pop).run_to_equilibrium();
  const WelfareReport w = compute_welfare(a, nt, *pop, s.supply.free_flow);
  if (w.social_welfare != w.user_benefit + w.regulator_revenue) broken.push_back("SW = Z + K");

  std::sort(broken.begin(), broken.end());
  broken.erase(std::unique(broken.begin(), broken.end()), broken.end());
  std::string detail = "FIFO, queue conservation, wallet bounds, token conservation, determinism, SW = Z + K";
  if (!broken.empty()) {
    detail = "violated:";
    for (const auto& x : broken) detail += " " + x + ";";
  }
  return report(13, broken.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<int()>> checks{
      {1, criterion1},  {2, criterion2},  {3, criterion3},   {4, criterion4},   {5, criterion5},
      {6, criterion6},  {7, criterion7},  {8, criterion8},   {9, criterion9},   {10, criterion10},
      {11, criterion11}, {12, criterion12}, {13, criterion13}};
  if (argc != 2 || !checks.count(std::atoi(argv[1]))) {
    std::fprintf(stderr, "usage: acceptance <1-13>\n");
    return 2;
  }
  try {
    return checks.at(std::atoi(argv[1]))();
  } catch (const std::exception& e) {
    return report(std::atoi(argv[1]), false, std::string("error: ") + e.what());
  }
}
