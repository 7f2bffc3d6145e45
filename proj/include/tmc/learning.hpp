#pragma once

#include <span>
#include <vector>

#include "tmc/market.hpp"

namespace tmc {

double smooth(double prev, double realized, double theta);
// Elementwise smoothing into `prev`.
void smooth(std::span<double> prev, std::span<const double> realized, double theta);

struct ForecastState {
  std::vector<double> tt;          // per interval
  std::vector<double> departure;   // per traveler, minute of day
};

// Token balance x(t) at the start of each minute t = 0..720 when the traveler
// starts the day with `start_balance`, departs at `departure` paying `toll`
// tokens, sells per the selling rule, and plans the same trip tomorrow.
std::vector<double> forecast_balance(double start_balance, int departure, double toll, double price,
                                     const MarketParams& params);
// Same trajectory written into `out` for minutes 0..out.size()-1 only.
void forecast_balance(double start_balance, int departure, double toll, double price, const MarketParams& params,
                      std::span<double> out);

}  // namespace tmc
