#include "tmc/supply.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tmc {

void SupplyParams::validate() const {
  if (!(capacity > 0.0)) throw ConfigError("supply.capacity", "must be positive");
  if (!(free_flow >= 0.0)) throw ConfigError("supply.free_flow", "must be >= 0");
  if (!(car_cost >= 0.0)) throw ConfigError("supply.car_cost", "must be >= 0");
  if (!(pt_time >= 0.0)) throw ConfigError("supply.pt_time", "must be >= 0");
  if (!(pt_wait >= 0.0)) throw ConfigError("supply.pt_wait", "must be >= 0");
  if (!(pt_fare >= 0.0)) throw ConfigError("supply.pt_fare", "must be >= 0");
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const auto& a = overrides[i];
    const std::string field = "events.capacity[" + std::to_string(i) + "]";
    if (!(a.factor > 0.0 && a.factor <= 1.0)) throw ConfigError(field + ".factor", "must lie in (0, 1]");
    if (!(a.start >= 0.0 && a.start < a.end)) throw ConfigError(field, "window must satisfy 0 <= start < end");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& b = overrides[j];
      const bool same_day = a.day < 0 || b.day < 0 || a.day == b.day;
      if (same_day && a.start < b.end && b.start < a.end)
        throw ConfigError(field, "overlaps capacity override " + std::to_string(j));
    }
  }
}

double effective_capacity(int day, double minute, const SupplyParams& params) {
  double s = params.capacity;
  int active = 0;
  for (const auto& o : params.overrides) {
    if ((o.day < 0 || o.day == day) && minute >= o.start && minute < o.end) {
      s *= o.factor;
      ++active;
    }
  }
  if (active > 1) throw ConfigError("events.capacity", "overlapping capacity overrides");
  return s;
}

const QueueState& Bottleneck::enqueue(int minute, std::span<const int> entrants, std::vector<double>* delays) {
  const double s = effective_capacity(day_, minute, *params_);
  for (int id : entrants) {
    if (delays) delays->push_back(static_cast<double>(state_.queue_len) / s);
    waiting_.push_back(id);
    ++state_.queue_len;
    ++state_.cumulative_departures;
  }
  return serve(minute);
}

const QueueState& Bottleneck::enqueue(int minute, int anonymous_entrants, std::vector<double>* delays) {
  if (anonymous_entrants < 0) throw DomainError("enqueue: negative entrants");
  std::vector<int> ids(static_cast<std::size_t>(anonymous_entrants), -1);
  return enqueue(minute, std::span<const int>(ids), delays);
}

const QueueState& Bottleneck::serve(int minute) {
  if (state_.queue_len == 0) {
    state_.credit = 0.0;
    return state_;
  }
  state_.credit += effective_capacity(day_, minute, *params_);
  const long k = std::min(static_cast<long>(std::floor(state_.credit + 1e-9)), state_.queue_len);
  for (long i = 0; i < k; ++i) {
    const int id = waiting_[head_++];
    if (id >= 0) discharged_.push_back(id);
  }
  state_.credit -= static_cast<double>(k);
  state_.queue_len -= k;
  state_.cumulative_arrivals += k;
  if (state_.queue_len == 0) {
    state_.credit = 0.0;
    waiting_.clear();
    head_ = 0;
  }
  return state_;
}

double Bottleneck::delay(int minute) const {
  return static_cast<double>(state_.queue_len) / effective_capacity(day_, minute, *params_);
}

std::vector<double> interval_travel_times(std::span<const int> intervals, std::span<const double> travel_times,
                                          double free_flow) {
  if (intervals.size() != travel_times.size()) throw DomainError("interval_travel_times: size mismatch");
  std::vector<double> sum(kIntervals, 0.0);
  std::vector<int> count(kIntervals, 0);
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const int h = intervals[i];
    if (h < 0 || h >= kIntervals) throw DomainError("interval_travel_times: interval out of range");
    sum[static_cast<std::size_t>(h)] += travel_times[i];
    ++count[static_cast<std::size_t>(h)];
  }
  for (int h = 0; h < kIntervals; ++h) {
    auto i = static_cast<std::size_t>(h);
    sum[i] = count[i] ? sum[i] / count[i] : free_flow;
  }
  return sum;
}

}  // namespace tmc
