#include "tmc/learning.hpp"

#include <algorithm>
#include <string>

namespace tmc {

namespace {

void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("learning.theta", "must lie in [0, 1]");
}

}  // namespace

double smooth(double prev, double realized, double theta) {
  check_theta(theta);
  return (1.0 - theta) * prev + theta * realized;
}

void smooth(std::span<double> prev, std::span<const double> realized, double theta) {
  check_theta(theta);
  if (prev.size() != realized.size()) throw DomainError("smooth: size mismatch");
  for (std::size_t i = 0; i < prev.size(); ++i) prev[i] = (1.0 - theta) * prev[i] + theta * realized[i];
}

std::vector<double> forecast_balance(double start_balance, int departure, double toll, double price,
                                     const MarketParams& params) {
  std::vector<double> x(kDayMinutes + 1);
  forecast_balance(start_balance, departure, toll, price, params, x);
  return x;
}

void forecast_balance(double start_balance, int departure, double toll, double price, const MarketParams& params,
                      std::span<double> out) {
  if (departure < 0 || departure >= kDayMinutes) throw DomainError("forecast_balance: departure outside the day");
  if (toll < 0.0) throw DomainError("forecast_balance: negative toll");
  if (out.size() > static_cast<std::size_t>(kDayMinutes + 1)) throw DomainError("forecast_balance: span too long");
  const int steps = static_cast<int>(out.size());
  if (params.allocation_mode == AllocationMode::lump_sum) {
    for (int t = 0; t < steps; ++t) out[static_cast<std::size_t>(t)] = t <= departure ? start_balance
                                                                        : std::max(start_balance - toll, 0.0);
    return;
  }
  const SellingRule rule(price, params);
  const double r = params.allocation_rate;
  const double cap = params.full_wallet();
  double x = start_balance;
  for (int t = 0; t < steps; ++t) {
    out[static_cast<std::size_t>(t)] = x;
    if (t == kDayMinutes) break;
    if (t == departure) {
      x = x >= toll ? std::min(x - toll + r, cap) : std::min(r, cap);
    } else {
      const double next = t < departure ? departure : departure + kDayMinutes;
      x = rule.sell(x, t, next, toll) ? std::min(r, cap) : std::min(x + r, cap);
    }
  }
}

}  // namespace tmc
