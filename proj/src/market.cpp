#include "tmc/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace tmc {

namespace {

constexpr double kCapTolerance = 1e-9;

void require(bool ok, const char* field, const char* msg) {
  if (!ok) throw ConfigError(std::string("market.") + field, msg);
}

}  // namespace

void MarketParams::validate() const {
  require(allocation_rate >= 0.0, "allocation_rate", "must be >= 0");
  require(lifetime > 0.0, "lifetime", "must be positive");
  require(fee_fixed_sell >= 0.0, "fee_fixed_sell", "must be >= 0");
  require(fee_fixed_buy >= 0.0, "fee_fixed_buy", "must be >= 0");
  require(fee_prop_sell >= 0.0 && fee_prop_sell < 1.0, "fee_prop_sell", "must lie in [0, 1)");
  require(fee_prop_buy >= 0.0, "fee_prop_buy", "must be >= 0");
  require(price_step > 0.0, "price_step", "must be positive");
  require(revenue_threshold >= 0.0, "revenue_threshold", "must be >= 0");
  require(price_cap >= 0.0, "price_cap", "must be >= 0");
  require(initial_price >= 0.0 && initial_price <= price_cap, "initial_price", "must lie in [0, price_cap]");
}

StepOutcome step_account(const Wallet& wallet, const AccountAction& action, const MarketParams& params,
                         double dt) {
  if (action.toll < 0.0) throw DomainError("step_account: negative toll");
  if (!(dt > 0.0)) throw DomainError("step_account: dt must be positive");
  StepOutcome out;
  out.wallet.owner = wallet.owner;
  const double x = wallet.balance;

  if (params.allocation_mode == AllocationMode::lump_sum) {
    switch (action.kind) {
      case AccountAction::Kind::travel:
        out.spent = action.toll;
        if (x >= action.toll) {
          out.wallet.balance = x - action.toll;
        } else {
          out.bought = action.toll - x;
          out.wallet.balance = 0.0;
        }
        break;
      case AccountAction::Kind::idle:
        out.wallet.balance = x;
        break;
      case AccountAction::Kind::sell_all:
        out.sold = x;
        out.wallet.balance = 0.0;
        break;
    }
    return out;
  }

  const double accrual = params.allocation_rate * dt;
  const double cap = params.full_wallet();
  out.accrued = accrual;
  double raw = 0.0;
  switch (action.kind) {
    case AccountAction::Kind::travel:
      out.spent = action.toll;
      if (x >= action.toll) {
        raw = x - action.toll + accrual;
      } else {
        out.bought = action.toll - x;
        raw = accrual;
      }
      break;
    case AccountAction::Kind::idle:
      raw = x + accrual;
      break;
    case AccountAction::Kind::sell_all:
      out.sold = x;
      raw = accrual;
      break;
  }
  out.wallet.balance = std::min(raw, cap);
  out.expired = raw - out.wallet.balance;
  return out;
}

double selling_revenue(double tokens, double price, const MarketParams& params) {
  if (tokens < 0.0) throw DomainError("selling_revenue: negative quantity");
  if (tokens > params.full_wallet() + kCapTolerance)
    throw DomainError("selling_revenue: quantity exceeds a full wallet");
  return tokens * price * (1.0 - params.fee_prop_sell) - params.fee_fixed_sell;
}

double buying_cost(double tokens, double price, const MarketParams& params) {
  if (tokens < 0.0) throw DomainError("buying_cost: negative quantity");
  return tokens * price * (1.0 + params.fee_prop_buy) + params.fee_fixed_buy;
}

double conditional_profit(const Wallet& wallet, double now, double next_departure, double toll,
                          double price, const MarketParams& params) {
  if (next_departure < now) throw DomainError("conditional_profit: departure lies in the past");
  if (toll < 0.0) throw DomainError("conditional_profit: negative toll");
  const double lr = params.full_wallet();
  const double future = std::min((next_departure - now) * params.allocation_rate, lr);
  double profit = selling_revenue(wallet.balance, price, params);
  if (toll >= future) profit -= buying_cost(toll - future, price, params);
  return profit;
}

SellDecision selling_decision(const Wallet& wallet, double now, double next_departure, double toll,
                              double price, const MarketParams& params) {
  const double profit = conditional_profit(wallet, now, next_departure, toll, price, params);
  if (profit <= 0.0) return SellDecision::hold;
  const double lr = params.full_wallet();
  const double future = std::min((next_departure - now) * params.allocation_rate, lr);
  if (toll >= future) return SellDecision::sell_now;
  return wallet.balance >= lr - kCapTolerance ? SellDecision::sell_now : SellDecision::hold;
}

double adjust_price(double price, double token_revenue, const MarketParams& params) {
  double p = price;
  if (token_revenue < -params.revenue_threshold) p += params.price_step;
  else if (token_revenue > params.revenue_threshold) p -= params.price_step;
  return std::clamp(p, 0.0, params.price_cap);
}

double next_price(double price, double token_revenue, const MarketParams& params) {
  const double k = params.price_feedback == PriceFeedback::outlay ? -token_revenue : token_revenue;
  return adjust_price(price, k, params);
}

void validate_interventions(const std::vector<MarketIntervention>& interventions) {
  for (std::size_t i = 0; i < interventions.size(); ++i) {
    const auto& a = interventions[i];
    const std::string field = "events.interventions[" + std::to_string(i) + "]";
    if (!(a.start >= 0.0 && a.start < a.end && a.end <= kDayMinutes))
      throw ConfigError(field, "window must satisfy 0 <= start < end <= 720");
    if (a.price && (*a.price < 0.0)) throw ConfigError(field + ".price", "must be >= 0");
    if (a.rate && (*a.rate < 0.0)) throw ConfigError(field + ".rate", "must be >= 0");
    if (a.fee_fixed && (*a.fee_fixed < 0.0)) throw ConfigError(field + ".fee_fixed", "must be >= 0");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& b = interventions[j];
      const bool same_day = a.day < 0 || b.day < 0 || a.day == b.day;
      if (same_day && a.start < b.end && b.start < a.end)
        throw ConfigError(field, "overlaps intervention " + std::to_string(j));
    }
  }
}

EffectiveMarket effective_market(double now, int day, double price, const MarketParams& params,
                                 const std::vector<MarketIntervention>& interventions) {
  EffectiveMarket m{price, params.allocation_rate, params.fee_fixed_sell, params.fee_fixed_buy};
  const MarketIntervention* hit = nullptr;
  for (const auto& iv : interventions) {
    if (!iv.active(day, now)) continue;
    if (hit) throw ConfigError("events.interventions", "overlapping intervention windows");
    hit = &iv;
  }
  if (hit) {
    if (hit->price) m.price = *hit->price;
    if (hit->rate) m.rate = *hit->rate;
    if (hit->fee_fixed) m.fee_fixed_sell = m.fee_fixed_buy = *hit->fee_fixed;
  }
  return m;
}

std::vector<MarketTerms> build_day_market(int day, double price, const MarketParams& params,
                                          const std::vector<MarketIntervention>& interventions) {
  std::vector<MarketTerms> terms(kDayMinutes, MarketTerms{price, params});
  if (interventions.empty()) return terms;
  const double cap = params.full_wallet();
  for (int t = 0; t < kDayMinutes; ++t) {
    const EffectiveMarket m = effective_market(t, day, price, params, interventions);
    auto& term = terms[static_cast<std::size_t>(t)];
    term.price = m.price;
    term.params.allocation_rate = m.rate;
    term.params.fee_fixed_sell = m.fee_fixed_sell;
    term.params.fee_fixed_buy = m.fee_fixed_buy;
    term.params.wallet_cap = cap;
  }
  return terms;
}

void write_transactions_csv(std::ostream& out, const std::vector<Transaction>& log) {
  out << "day,minute,traveler_id,kind,tokens,dollars\n";
  char buf[160];
  for (const auto& tx : log) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%s,%.10g,%.10g\n", tx.day, tx.minute, tx.traveler,
                  tx.kind == TxKind::buy ? "buy" : "sell", tx.tokens, tx.dollars);
    out << buf;
  }
}

}  // namespace tmc
