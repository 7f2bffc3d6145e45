#include <cmath>
#include <sstream>

#include "doctest.h"
#include "tmc/optimizer.hpp"

using namespace tmc;

TEST_SUITE("optimizer") {
  TEST_CASE("mutation") {
    const std::vector<Genome> pop{{1, 1}, {2, 0}, {0, 2}, {5, 5}};
    const std::vector<Bounds> wide(2, Bounds{-10, 10});
    Rng rng = make_stream(1, "mut");
    // Every peer draw equals one of the three others, so F = 0 copies a peer.
    for (int k = 0; k < 50; ++k) {
      const Genome y = mutate(pop, 3, 0.0, rng, wide);
      CHECK((y == pop[0] || y == pop[1] || y == pop[2]));
    }
    // With only members 0, 1, 2 besides i, find the (r1, r2, r3) = (0, 1, 2) draw.
    bool seen = false;
    for (int k = 0; k < 200 && !seen; ++k) {
      const Genome y = mutate(pop, 3, 0.5, rng, wide);
      seen = std::fabs(y[0] - 2.0) < 1e-12 && std::fabs(y[1] - 0.0) < 1e-12;
    }
    CHECK(seen);
    const std::vector<Bounds> tight(2, Bounds{0, 1.5});
    for (int k = 0; k < 50; ++k) {
      for (double v : mutate(pop, 3, 2.0, rng, tight)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.5);
      }
    }
    const std::vector<Genome> three{{1}, {2}, {3}};
    CHECK_THROWS_AS(mutate(three, 0, 0.5, rng, wide), ConfigError);
  }

  TEST_CASE("crossover") {
    const Genome target{0, 0, 0, 0, 0}, variant{1, 1, 1, 1, 1};
    Rng a = make_stream(3, "cx"), b = make_stream(3, "cx");
    CHECK(crossover(target, variant, 1.0, a) == variant);
    for (int k = 0; k < 100; ++k) {
      const Genome t = crossover(target, variant, 0.0, a);
      int changed = 0;
      for (double v : t) changed += v != 0.0;
      CHECK(changed == 1);
    }
    Rng c = make_stream(9, "cx"), d = make_stream(9, "cx");
    CHECK(crossover(target, variant, 0.5, c) == crossover(target, variant, 0.5, d));
    CHECK_THROWS_AS(crossover(target, Genome{1}, 0.5, b), DomainError);
  }

  TEST_CASE("selection is strict") {
    CHECK_FALSE(select(1.0, 1.0));
    CHECK(select(1.0, 1.0 + 1e-12));
    CHECK_FALSE(select(1.0, 0.5));
  }

  TEST_CASE("latin hypercube puts one point per stratum") {
    const std::vector<Bounds> b{{0, 10}, {-1, 1}};
    Rng rng = make_stream(4, "lhs");
    const auto pop = latin_hypercube(10, b, rng);
    for (std::size_t g = 0; g < 2; ++g) {
      std::vector<int> hits(10, 0);
      for (const auto& x : pop) {
        const double u = (x[g] - b[g].lo) / (b[g].hi - b[g].lo);
        ++hits[static_cast<std::size_t>(std::min(9.0, std::floor(u * 10)))];
      }
      for (int h : hits) CHECK(h == 1);
    }
  }

  TEST_CASE("decoded tolls are always valid") {
    Rng rng = make_stream(8, "decode");
    const auto bounds = default_toll_bounds();
    for (int k = 0; k < 2000; ++k) {
      Genome g(11);
      for (std::size_t i = 0; i < 11; ++i) g[i] = bounds[i].lo + uniform01(rng) * (bounds[i].hi - bounds[i].lo);
      if (k % 7 == 0) g[6] = g[5];  // duplicate breakpoints
      const TollProfile p = decode_toll(g);
      CHECK_NOTHROW(p.validate());
      for (std::size_t i = 1; i < 6; ++i) CHECK(p.breakpoints[i] - p.breakpoints[i - 1] >= 1.0 - 1e-9);
    }
    CHECK_THROWS_AS(decode_toll(Genome(10)), DomainError);
  }

  TEST_CASE("best so far never decreases") {
    DEConfig c;
    c.bounds.assign(3, Bounds{-2, 2});
    c.max_generations = 30;
    const DEResult r = differential_evolution(
        [](std::span<const double> x) { return std::sin(3 * x[0]) + std::cos(2 * x[1]) - x[2] * x[2]; }, c);
    REQUIRE(r.trace.best.size() == 31);
    for (std::size_t g = 1; g < r.trace.best.size(); ++g) CHECK(r.trace.best[g] >= r.trace.best[g - 1]);
    std::ostringstream out;
    write_trace_csv(out, r.trace);
    CHECK(out.str().rfind("generation,best_welfare,mean_welfare,p0,p1,p2\n", 0) == 0);
  }

  TEST_CASE("sphere self-test reaches the origin") {
    const DEResult r = sphere_self_test(sphere_config());
    CHECK(std::sqrt(-r.best_fitness) <= 1e-3);
  }

  TEST_CASE("DE is deterministic and worker count independent") {
    DEConfig c = sphere_config(3);
    c.max_generations = 20;
    const DEResult a = sphere_self_test(c);
    const DEResult b = sphere_self_test(c);
    CHECK(a.best == b.best);
    CHECK(a.trace.mean == b.trace.mean);
  }

  TEST_CASE("configuration errors") {
    DEConfig c;
    c.bounds.assign(2, Bounds{0, 1});
    c.population_size = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.population_size = 15;
    c.crossover_rate = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("grid search") {
    Scenario s;
    s.population.n_travelers = 300;
    s.supply.capacity = 1.56;
    s.horizon = 40;
    s.instrument.kind = InstrumentKind::TMC;
    s.instrument.toll.levels = {0, 1, 2, 1, 0};
    const GridSearchResult one = grid_search_allocation(s, {0.004});
    CHECK(one.best_rate == 0.004);
    CHECK_THROWS_AS(grid_search_allocation(s, {}), ConfigError);
  }

  TEST_CASE("parallel_for covers every index once") {
    std::vector<int> hits(257, 0);
    parallel_for(257, [&](int i) { ++hits[static_cast<std::size_t>(i)]; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS(parallel_for(10, [](int i) {
      if (i == 7) throw std::runtime_error("boom");
    }));
  }
}
