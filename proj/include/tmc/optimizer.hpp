#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "tmc/common.hpp"
#include "tmc/demand.hpp"
#include "tmc/engine.hpp"

namespace tmc {

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct DEConfig {
  int population_size = 15;
  double scale_factor = 0.8;
  double crossover_rate = 0.9;
  int max_generations = 40;
  std::vector<Bounds> bounds;
  int replications = 1;  // simulation seeds averaged per evaluation
  std::uint64_t seed = 1;

  void validate() const;
};

using Genome = std::vector<double>;
// Maximized; evaluations may run concurrently.
using Objective = std::function<double(std::span<const double>)>;

Genome mutate(const std::vector<Genome>& pop, int i, double scale_factor, Rng& rng, std::span<const Bounds> bounds);
Genome crossover(const Genome& target, const Genome& variant, double crossover_rate, Rng& rng);
// True when the trial replaces the target (strictly better fitness).
bool select(double target_fitness, double trial_fitness);

std::vector<Genome> latin_hypercube(int n, std::span<const Bounds> bounds, Rng& rng);

struct DETrace {
  std::vector<double> best;
  std::vector<double> mean;
  std::vector<Genome> best_params;
};

struct DEResult {
  Genome best;
  double best_fitness = 0.0;
  DETrace trace;
  long evaluations = 0;
};

DEResult differential_evolution(const Objective& objective, const DEConfig& config);

// generation,best_welfare,mean_welfare,best_params...
void write_trace_csv(std::ostream& out, const DETrace& trace);

// Settings for the -sum(x^2) check in 11 dimensions on [-5, 5]. The toll
// defaults (F 0.8, CR 0.9) stall on it at NP 15, so the check uses a
// smaller step and a gentler crossover.
DEConfig sphere_config(std::uint64_t seed = 1);
DEResult sphere_self_test(const DEConfig& config);

// Genes: five levels followed by six breakpoints.
TollProfile decode_toll(std::span<const double> genes);
std::vector<Bounds> default_toll_bounds(double max_level = 10.0, double earliest = 300.0, double latest = 660.0);

struct TollOptimization {
  TollProfile best;
  double welfare = 0.0;
  DEResult search;
  long unconverged_evaluations = 0;
};

// Maximizes social welfare over step tolls. Every candidate starts from
// `warm_start` (travel forecasts) and is compared against `nt`.
TollOptimization optimize_toll(const Scenario& scenario, const DEConfig& config,
                               std::shared_ptr<const Population> population = nullptr,
                               const EquilibriumResult* nt = nullptr, const SimulationState* warm_start = nullptr);

struct GridSearchResult {
  double best_rate = 0.0;
  double best_welfare = 0.0;
  std::vector<double> rates;
  std::vector<double> welfare;
  std::vector<double> prices;
};

GridSearchResult grid_search_allocation(const Scenario& scenario, const std::vector<double>& rate_grid,
                                        std::shared_ptr<const Population> population = nullptr,
                                        const EquilibriumResult* nt = nullptr,
                                        const SimulationState* warm_start = nullptr);

// Worker count for parallel evaluations: TMC_WORKERS, else hardware threads.
int worker_count();
// Runs fn(0..n-1) over the worker pool.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace tmc
