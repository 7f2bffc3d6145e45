#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "tmc/common.hpp"

namespace tmc {

enum class AllocationMode { continuous, lump_sum };

// Which daily figure drives the price rule. `outlay` feeds the regulator's
// net payment to travelers (sells minus buys): excess selling lowers the
// price. `revenue` feeds buys minus sells unchanged, which moves the price
// away from the token-balance point because demand falls as the price rises.
enum class PriceFeedback { outlay, revenue };

struct MarketParams {
  double allocation_rate = 0.00285;  // tokens/min
  double lifetime = 720.0;           // min
  double fee_fixed_sell = 0.0;       // $
  double fee_fixed_buy = 0.0;        // $
  double fee_prop_sell = 0.0;
  double fee_prop_buy = 0.0;
  double price_step = 0.05;
  double revenue_threshold = 300.0;
  double price_cap = 10.0;
  double initial_price = 1.0;
  AllocationMode allocation_mode = AllocationMode::continuous;
  PriceFeedback price_feedback = PriceFeedback::outlay;
  // Wallet cap when it must differ from lifetime * rate (set on terms derived
  // from an intervention that suspends allocation).
  std::optional<double> wallet_cap;

  double full_wallet() const { return wallet_cap ? *wallet_cap : lifetime * allocation_rate; }
  void validate() const;
};

struct Wallet {
  int owner = 0;
  double balance = 0.0;
};

struct AccountAction {
  enum class Kind { travel, idle, sell_all };
  Kind kind = Kind::idle;
  double toll = 0.0;  // tokens, travel only

  static AccountAction travel(double toll) { return {Kind::travel, toll}; }
  static AccountAction idle() { return {Kind::idle, 0.0}; }
  static AccountAction sell_all() { return {Kind::sell_all, 0.0}; }
};

struct StepOutcome {
  Wallet wallet;
  double bought = 0.0;
  double sold = 0.0;
  double spent = 0.0;    // tokens surrendered for the toll
  double accrued = 0.0;
  double expired = 0.0;  // accrual lost at the cap
};

// One minute-step (or dt minutes) of account evolution. In lump-sum mode
// there is no accrual and no expiry; the endowment is granted separately.
StepOutcome step_account(const Wallet& wallet, const AccountAction& action, const MarketParams& params,
                         double dt = 1.0);

double selling_revenue(double tokens, double price, const MarketParams& params);
double buying_cost(double tokens, double price, const MarketParams& params);

double conditional_profit(const Wallet& wallet, double now, double next_departure, double toll,
                          double price, const MarketParams& params);

enum class SellDecision { hold, sell_now };

SellDecision selling_decision(const Wallet& wallet, double now, double next_departure, double toll,
                              double price, const MarketParams& params);

// Selling rule with the terms folded into constants, for the per-minute loops.
// Agrees with selling_decision on every input.
class SellingRule {
 public:
  SellingRule(double price, const MarketParams& p)
      : rate_(p.allocation_rate),
        cap_(p.full_wallet()),
        sell_mult_(price * (1.0 - p.fee_prop_sell)),
        sell_fixed_(p.fee_fixed_sell),
        buy_mult_(price * (1.0 + p.fee_prop_buy)),
        buy_fixed_(p.fee_fixed_buy) {}

  bool sell(double balance, double now, double next_departure, double toll) const {
    double future = (next_departure - now) * rate_;
    if (future > cap_) future = cap_;
    double profit = balance * sell_mult_ - sell_fixed_;
    const bool short_at_departure = toll >= future;
    if (short_at_departure) profit -= (toll - future) * buy_mult_ + buy_fixed_;
    if (profit <= 0.0) return false;
    return short_at_departure || balance >= cap_ - 1e-9;
  }

 private:
  double rate_, cap_, sell_mult_, sell_fixed_, buy_mult_, buy_fixed_;
};

// p - dp above the band, p + dp below it, clamped to [0, price_cap].
double adjust_price(double price, double token_revenue, const MarketParams& params);
// Next day's price from the day's token revenue (buys minus sells) under
// the configured feedback.
double next_price(double price, double token_revenue, const MarketParams& params);

struct MarketIntervention {
  int day = -1;  // negative: every day
  double start = 0.0;
  double end = 0.0;  // half-open [start, end)
  std::optional<double> price;
  std::optional<double> rate;
  std::optional<double> fee_fixed;  // applied to both buy and sell

  bool active(int d, double minute) const {
    return (day < 0 || day == d) && minute >= start && minute < end;
  }
};

// Throws ConfigError on malformed or overlapping windows.
void validate_interventions(const std::vector<MarketIntervention>& interventions);

struct EffectiveMarket {
  double price = 0.0;
  double rate = 0.0;
  double fee_fixed_sell = 0.0;
  double fee_fixed_buy = 0.0;
};

EffectiveMarket effective_market(double now, int day, double price, const MarketParams& params,
                                 const std::vector<MarketIntervention>& interventions);

// Price and trading terms in force at one minute.
struct MarketTerms {
  double price = 0.0;
  MarketParams params;
};

// Terms for every minute of `day`. Interventions keep the base wallet cap.
std::vector<MarketTerms> build_day_market(int day, double price, const MarketParams& params,
                                          const std::vector<MarketIntervention>& interventions);

enum class TxKind { buy, sell };

struct Transaction {
  int day = 0;
  int minute = 0;
  int traveler = 0;
  TxKind kind = TxKind::buy;
  double tokens = 0.0;
  double dollars = 0.0;
};

void write_transactions_csv(std::ostream& out, const std::vector<Transaction>& log);

}  // namespace tmc
