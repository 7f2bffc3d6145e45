#pragma once

#include <span>
#include <vector>

#include "tmc/common.hpp"

namespace tmc {

struct CapacityOverride {
  int day = -1;  // negative: every day
  double start = 0.0;
  double end = 0.0;  // half-open [start, end)
  double factor = 1.0;
};

struct SupplyParams {
  double capacity = 39.0;  // veh/min
  double free_flow = 24.0;
  double car_cost = 3.13;
  double pt_time = 43.0;
  double pt_wait = 5.0;
  double pt_fare = 2.0;
  std::vector<CapacityOverride> overrides;

  void validate() const;
};

double effective_capacity(int day, double minute, const SupplyParams& params);

// Point queue on the minute grid. Each minute the entrants join the back of
// the queue, then floor(credit) vehicles are discharged where the credit
// accumulates the effective capacity; an emptied queue forfeits leftover
// credit. A vehicle's queueing delay is the number of vehicles ahead of it
// on entry divided by the capacity.
struct QueueState {
  long queue_len = 0;               // vehicles waiting after the last service
  long cumulative_departures = 0;   // vehicles that entered the bottleneck
  long cumulative_arrivals = 0;     // vehicles discharged
  double credit = 0.0;              // fractional service capacity carried over
};

class Bottleneck {
 public:
  Bottleneck(const SupplyParams& params, int day) : params_(&params), day_(day) {}

  // Entrants join in the given order, then the minute's service runs.
  // Queueing delays of the entrants are appended to `delays` if given.
  const QueueState& enqueue(int minute, std::span<const int> entrants, std::vector<double>* delays = nullptr);
  const QueueState& enqueue(int minute, int anonymous_entrants, std::vector<double>* delays = nullptr);
  // Delay faced by a vehicle entering now: Q / s.
  double delay(int minute) const;
  const QueueState& state() const { return state_; }
  // Discharged vehicle ids in discharge order (named entrants only).
  const std::vector<int>& discharge_order() const { return discharged_; }

 private:
  const QueueState& serve(int minute);

  const SupplyParams* params_;
  int day_;
  QueueState state_;
  std::vector<int> waiting_;
  std::size_t head_ = 0;
  std::vector<int> discharged_;
};

// Mean travel time of travelers departing in each interval; free flow where nobody did.
std::vector<double> interval_travel_times(std::span<const int> intervals, std::span<const double> travel_times,
                                          double free_flow);

}  // namespace tmc
