#include "tmc/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace tmc {

double regulator_revenue_cp(const DayResult& day) {
  if (day.instrument != InstrumentKind::CP) throw DomainError("regulator_revenue_cp: day is not a CP day");
  double k = 0.0;
  for (const auto& t : day.travelers) k += t.mode == Mode::car ? t.toll : t.money_cost;
  return k;
}

TmcRevenue regulator_revenue_tmc(const DayResult& day) {
  if (day.instrument != InstrumentKind::TMC) throw DomainError("regulator_revenue_tmc: day is not a TMC day");
  TmcRevenue k;
  for (const auto& t : day.travelers)
    if (t.mode == Mode::pt) k.fares += t.money_cost - t.token_cash;
  for (const auto& tx : day.transactions) k.token_net += tx.kind == TxKind::buy ? tx.dollars : -tx.dollars;
  return k;
}

double regulator_revenue(const DayResult& day) {
  return day.fare_revenue + day.toll_revenue + day.token_revenue;
}

double user_benefit(double experienced_utility_j, double experienced_utility_nt) {
  return experienced_utility_j - experienced_utility_nt;
}

double gini(std::span<const double> values) {
  if (values.empty()) throw DomainError("gini: empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    total += v[i];
    weighted += (2.0 * static_cast<double>(i) - n + 1.0) * v[i];
  }
  if (total == 0.0) return 0.0;
  return weighted / (n * total);
}

std::optional<double> tti(const DayResult& day, double free_flow) {
  return tti(std::span<const DayResult>(&day, 1), free_flow);
}

std::optional<double> tti(std::span<const DayResult> days, double free_flow) {
  double sum = 0.0;
  long count = 0;
  for (const auto& d : days) {
    for (const auto& t : d.travelers) {
      if (t.mode != Mode::car) continue;
      sum += t.travel_time;
      ++count;
    }
  }
  if (count == 0 || free_flow <= 0.0) return std::nullopt;
  return sum / static_cast<double>(count) / free_flow;
}

BuybackStats buyback_stats(std::span<const Transaction> log, int n_travelers, int days) {
  std::vector<const Transaction*> sorted;
  sorted.reserve(log.size());
  for (const auto& tx : log) sorted.push_back(&tx);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Transaction* a, const Transaction* b) {
    if (a->day != b->day) return a->day < b->day;
    if (a->traveler != b->traveler) return a->traveler < b->traveler;
    return a->minute < b->minute;
  });
  BuybackStats s;
  int day = -1, who = -1;
  bool sold = false;
  for (const Transaction* tx : sorted) {
    if (tx->day != day || tx->traveler != who) {
      day = tx->day;
      who = tx->traveler;
      sold = false;
    }
    if (tx->kind == TxKind::sell) {
      sold = true;
    } else {
      ++s.buys;
      if (sold) ++s.buybacks;
    }
  }
  if (s.buys > 0) s.fraction = static_cast<double>(s.buybacks) / static_cast<double>(s.buys);
  if (n_travelers > 0 && days > 0)
    s.per_capita = static_cast<double>(s.buybacks) / (static_cast<double>(n_travelers) * days);
  return s;
}

std::vector<double> mean_utilities(std::span<const DayResult> days) {
  if (days.empty()) throw DomainError("mean_utilities: no days");
  std::vector<double> u(days.front().travelers.size(), 0.0);
  for (const auto& d : days) {
    if (d.travelers.size() != u.size()) throw DomainError("mean_utilities: population size changed");
    for (std::size_t n = 0; n < u.size(); ++n) u[n] += d.travelers[n].utility;
  }
  for (double& x : u) x /= static_cast<double>(days.size());
  return u;
}

WelfareReport compute_welfare(std::span<const DayResult> j, std::span<const DayResult> nt, const Population& pop,
                              double free_flow) {
  const std::vector<double> uj = mean_utilities(j);
  const std::vector<double> un = mean_utilities(nt);
  if (uj.size() != pop.size() || un.size() != pop.size()) throw DomainError("compute_welfare: size mismatch");
  WelfareReport w;
  w.days = static_cast<int>(j.size());
  w.z.resize(pop.size());
  for (std::size_t n = 0; n < pop.size(); ++n) w.z[n] = user_benefit(uj[n], un[n]);
  w.user_benefit = std::accumulate(w.z.begin(), w.z.end(), 0.0);

  double revenue = 0.0, pt = 0.0, price = 0.0;
  std::vector<Transaction> log;
  for (const auto& d : j) {
    revenue += regulator_revenue(d);
    pt += static_cast<double>(d.travelers.size() - static_cast<std::size_t>(d.car_trips()));
    price += d.price;
    log.insert(log.end(), d.transactions.begin(), d.transactions.end());
  }
  const double days = static_cast<double>(j.size());
  w.regulator_revenue = 2.0 * revenue / days;
  w.social_welfare = w.user_benefit + w.regulator_revenue;
  w.pt_share = pt / days / static_cast<double>(pop.size());
  w.mean_price = price / days;

  std::vector<double> wealth(pop.size());
  for (std::size_t n = 0; n < pop.size(); ++n) {
    wealth[n] = pop[n].income + w.z[n];
    if (wealth[n] < 0.0) w.negative_gini_inputs = true;
  }
  w.gini = gini(wealth);
  w.tti = tti(j, free_flow);
  const BuybackStats bb = buyback_stats(log, static_cast<int>(pop.size()), static_cast<int>(j.size()));
  w.buyback_fraction = bb.fraction;
  w.buyback_per_capita = bb.per_capita;
  return w;
}

WelfareReport compute_welfare(const EquilibriumResult& j, const EquilibriumResult& nt, const Population& pop,
                              double free_flow) {
  WelfareReport w = compute_welfare(std::span<const DayResult>(j.window), std::span<const DayResult>(nt.window),
                                    pop, free_flow);
  w.converged = j.converged && nt.converged;
  return w;
}

void write_benefit_curves(std::ostream& out, const WelfareReport& report, const Population& pop) {
  const std::size_t n = report.z.size();
  std::vector<std::size_t> by_benefit(n), by_income(n);
  std::iota(by_benefit.begin(), by_benefit.end(), 0);
  std::iota(by_income.begin(), by_income.end(), 0);
  std::stable_sort(by_benefit.begin(), by_benefit.end(),
                   [&](std::size_t a, std::size_t b) { return report.z[a] < report.z[b]; });
  std::stable_sort(by_income.begin(), by_income.end(),
                   [&](std::size_t a, std::size_t b) { return pop[a].income < pop[b].income; });
  out << "percentile,cumulative_benefit_by_benefit,cumulative_benefit_by_income\n";
  double cb = 0.0, ci = 0.0;
  char buf[128];
  for (std::size_t k = 0; k < n; ++k) {
    cb += report.z[by_benefit[k]];
    ci += report.z[by_income[k]];
    std::snprintf(buf, sizeof buf, "%.6f,%.10g,%.10g\n", 100.0 * static_cast<double>(k + 1) / n, cb, ci);
    out << buf;
  }
}

}  // namespace tmc
