#include "tmc/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "tmc/experiments.hpp"

namespace tmc {

void DEConfig::validate() const {
  if (population_size < 4) throw ConfigError("de.population_size", "needs at least 4 members");
  if (!(scale_factor >= 0.0)) throw ConfigError("de.scale_factor", "must be >= 0");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ConfigError("de.crossover_rate", "must lie in [0, 1]");
  if (max_generations < 0) throw ConfigError("de.max_generations", "must be >= 0");
  if (bounds.empty()) throw ConfigError("de.bounds", "no parameters");
  for (const auto& b : bounds)
    if (!(b.lo <= b.hi)) throw ConfigError("de.bounds", "lo must not exceed hi");
  if (replications < 1) throw ConfigError("de.replications", "must be >= 1");
}

Genome mutate(const std::vector<Genome>& pop, int i, double scale_factor, Rng& rng, std::span<const Bounds> bounds) {
  const int np = static_cast<int>(pop.size());
  if (np < 4) throw ConfigError("de.population_size", "needs at least 4 members");
  auto pick = [&](std::initializer_list<int> taken) {
    for (;;) {
      const int k = static_cast<int>(uniform01(rng) * np);
      if (std::find(taken.begin(), taken.end(), k) == taken.end()) return k;
    }
  };
  const int r1 = pick({i});
  const int r2 = pick({i, r1});
  const int r3 = pick({i, r1, r2});
  Genome y(pop[static_cast<std::size_t>(r1)].size());
  for (std::size_t g = 0; g < y.size(); ++g) {
    y[g] = pop[static_cast<std::size_t>(r1)][g] +
           scale_factor * (pop[static_cast<std::size_t>(r2)][g] - pop[static_cast<std::size_t>(r3)][g]);
    if (g < bounds.size()) y[g] = std::clamp(y[g], bounds[g].lo, bounds[g].hi);
  }
  return y;
}

Genome crossover(const Genome& target, const Genome& variant, double crossover_rate, Rng& rng) {
  if (target.size() != variant.size()) throw DomainError("crossover: length mismatch");
  Genome trial = target;
  if (trial.empty()) return trial;
  const auto forced = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(trial.size()));
  for (std::size_t g = 0; g < trial.size(); ++g) {
    if (uniform01(rng) < crossover_rate || g == forced) trial[g] = variant[g];
  }
  return trial;
}

bool select(double target_fitness, double trial_fitness) { return trial_fitness > target_fitness; }

std::vector<Genome> latin_hypercube(int n, std::span<const Bounds> bounds, Rng& rng) {
  std::vector<Genome> pop(static_cast<std::size_t>(n), Genome(bounds.size()));
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (std::size_t g = 0; g < bounds.size(); ++g) {
    std::iota(strata.begin(), strata.end(), 0);
    for (int k = n - 1; k > 0; --k) {
      const int j = static_cast<int>(uniform01(rng) * (k + 1));
      std::swap(strata[static_cast<std::size_t>(k)], strata[static_cast<std::size_t>(j)]);
    }
    for (int k = 0; k < n; ++k) {
      const double u = (strata[static_cast<std::size_t>(k)] + uniform01(rng)) / n;
      pop[static_cast<std::size_t>(k)][g] = bounds[g].lo + u * (bounds[g].hi - bounds[g].lo);
    }
  }
  return pop;
}

int worker_count() {
  if (const char* env = std::getenv("TMC_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

DEResult differential_evolution(const Objective& objective, const DEConfig& config) {
  config.validate();
  const int np = config.population_size;
  Rng init = make_stream(config.seed, "de-init");
  std::vector<Genome> pop = latin_hypercube(np, config.bounds, init);
  std::vector<double> fit(static_cast<std::size_t>(np));
  DEResult res;
  parallel_for(np, [&](int i) { fit[static_cast<std::size_t>(i)] = objective(pop[static_cast<std::size_t>(i)]); });
  res.evaluations += np;

  auto record = [&]() {
    const auto best = std::max_element(fit.begin(), fit.end()) - fit.begin();
    res.trace.best.push_back(fit[static_cast<std::size_t>(best)]);
    res.trace.mean.push_back(std::accumulate(fit.begin(), fit.end(), 0.0) / np);
    res.trace.best_params.push_back(pop[static_cast<std::size_t>(best)]);
  };
  record();

  std::vector<Genome> trials(static_cast<std::size_t>(np));
  std::vector<double> trial_fit(static_cast<std::size_t>(np));
  for (int gen = 1; gen <= config.max_generations; ++gen) {
    for (int i = 0; i < np; ++i) {
      Rng rng = make_stream(config.seed, "de", static_cast<std::uint64_t>(gen) * 1000003ULL + static_cast<std::uint64_t>(i));
      const Genome variant = mutate(pop, i, config.scale_factor, rng, config.bounds);
      trials[static_cast<std::size_t>(i)] = crossover(pop[static_cast<std::size_t>(i)], variant, config.crossover_rate, rng);
    }
    parallel_for(np, [&](int i) {
      trial_fit[static_cast<std::size_t>(i)] = objective(trials[static_cast<std::size_t>(i)]);
    });
    res.evaluations += np;
    for (std::size_t i = 0; i < static_cast<std::size_t>(np); ++i) {
      if (select(fit[i], trial_fit[i])) {
        pop[i] = trials[i];
        fit[i] = trial_fit[i];
      }
    }
    record();
  }
  res.best = res.trace.best_params.back();
  res.best_fitness = res.trace.best.back();
  return res;
}

void write_trace_csv(std::ostream& out, const DETrace& trace) {
  out << "generation,best_welfare,mean_welfare";
  const std::size_t dims = trace.best_params.empty() ? 0 : trace.best_params.front().size();
  for (std::size_t g = 0; g < dims; ++g) out << ",p" << g;
  out << "\n";
  char buf[64];
  for (std::size_t k = 0; k < trace.best.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g", k, trace.best[k], trace.mean[k]);
    out << buf;
    for (double v : trace.best_params[k]) {
      std::snprintf(buf, sizeof buf, ",%.10g", v);
      out << buf;
    }
    out << "\n";
  }
}

DEConfig sphere_config(std::uint64_t seed) {
  DEConfig c;
  c.population_size = 15;
  c.scale_factor = 0.5;
  c.crossover_rate = 0.3;
  c.max_generations = 200;
  c.bounds.assign(11, Bounds{-5.0, 5.0});
  c.seed = seed;
  return c;
}

DEResult sphere_self_test(const DEConfig& config) {
  return differential_evolution(
      [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return -s;
      },
      config);
}

TollProfile decode_toll(std::span<const double> genes) {
  if (genes.size() != 11) throw DomainError("decode_toll: expected 5 levels and 6 breakpoints");
  TollProfile p;
  for (std::size_t k = 0; k < 5; ++k) p.levels[k] = std::max(0.0, genes[k]);
  std::array<double, 6> b{};
  for (std::size_t k = 0; k < 6; ++k) b[k] = genes[5 + k];
  std::sort(b.begin(), b.end());
  for (std::size_t k = 1; k < 6; ++k) b[k] = std::max(b[k], b[k - 1] + 1.0);
  p.breakpoints = b;
  return p;
}

std::vector<Bounds> default_toll_bounds(double max_level, double earliest, double latest) {
  std::vector<Bounds> b(5, Bounds{0.0, max_level});
  b.insert(b.end(), 6, Bounds{earliest, latest});
  return b;
}

TollOptimization optimize_toll(const Scenario& scenario, const DEConfig& config,
                               std::shared_ptr<const Population> population, const EquilibriumResult* nt,
                               const SimulationState* warm_start) {
  if (scenario.instrument.kind == InstrumentKind::NT) throw ConfigError("instrument.kind", "nothing to optimize");
  if (!population)
    population = std::make_shared<const Population>(
        synthesize_population(scenario.population, scenario.supply.free_flow));

  std::vector<EquilibriumResult> baselines(static_cast<std::size_t>(config.replications));
  std::vector<Scenario> reps(static_cast<std::size_t>(config.replications), scenario);
  for (int k = 0; k < config.replications; ++k) {
    reps[static_cast<std::size_t>(k)].seed = scenario.seed + static_cast<std::uint64_t>(k);
    if (k == 0 && nt) {
      baselines[0] = *nt;
      continue;
    }
    Simulation base(as_instrument(reps[static_cast<std::size_t>(k)], InstrumentKind::NT), population);
    baselines[static_cast<std::size_t>(k)] = base.run_to_equilibrium();
  }
  const SimulationState* warm = warm_start ? warm_start : &baselines[0].final_state;

  std::atomic<long> unconverged{0};
  const Objective objective = [&](std::span<const double> genes) {
    double total = 0.0;
    for (int k = 0; k < config.replications; ++k) {
      Scenario s = reps[static_cast<std::size_t>(k)];
      s.instrument.toll = decode_toll(genes);
      const InstrumentOutcome out = evaluate(s, population, &baselines[static_cast<std::size_t>(k)], warm);
      if (!out.welfare.converged) ++unconverged;
      total += out.welfare.social_welfare;
    }
    return total / config.replications;
  };
  TollOptimization res;
  res.search = differential_evolution(objective, config);
  res.best = decode_toll(res.search.best);
  res.welfare = res.search.best_fitness;
  res.unconverged_evaluations = unconverged;
  return res;
}

GridSearchResult grid_search_allocation(const Scenario& scenario, const std::vector<double>& rate_grid,
                                        std::shared_ptr<const Population> population, const EquilibriumResult* nt,
                                        const SimulationState* warm_start) {
  if (rate_grid.empty()) throw ConfigError("grid", "empty allocation-rate grid");
  if (!population)
    population = std::make_shared<const Population>(
        synthesize_population(scenario.population, scenario.supply.free_flow));
  EquilibriumResult nt_local;
  if (!nt) {
    Simulation base(as_instrument(scenario, InstrumentKind::NT), population);
    nt_local = base.run_to_equilibrium();
    nt = &nt_local;
  }
  GridSearchResult g;
  g.rates = rate_grid;
  g.welfare.resize(rate_grid.size());
  g.prices.resize(rate_grid.size());
  parallel_for(static_cast<int>(rate_grid.size()), [&](int i) {
    Scenario s = scenario;
    s.market.allocation_rate = rate_grid[static_cast<std::size_t>(i)];
    const InstrumentOutcome out = evaluate(s, population, nt, warm_start);
    g.welfare[static_cast<std::size_t>(i)] = out.welfare.social_welfare;
    g.prices[static_cast<std::size_t>(i)] = out.welfare.mean_price;
  });
  const auto best = std::max_element(g.welfare.begin(), g.welfare.end()) - g.welfare.begin();
  g.best_rate = g.rates[static_cast<std::size_t>(best)];
  g.best_welfare = g.welfare[static_cast<std::size_t>(best)];
  return g;
}

}  // namespace tmc
