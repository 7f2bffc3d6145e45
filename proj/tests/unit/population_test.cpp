#include <cmath>
#include <sstream>

#include "doctest.h"
#include "tmc/population.hpp"

using namespace tmc;

TEST_SUITE("population") {
  TEST_CASE("triangular inverse cdf hits bounds and mode") {
    CHECK(tri_inverse_cdf(0.0, 0.1, 0.5, 1.0) == doctest::Approx(0.1));
    CHECK(tri_inverse_cdf(1.0, 0.1, 0.5, 1.0) == doctest::Approx(1.0));
    CHECK(tri_inverse_cdf(4.0 / 9.0, 0.1, 0.5, 1.0) == doctest::Approx(0.5));
  }

  TEST_CASE("income conversion from a fixed annual draw") {
    PopulationConfig c;
    c.n_travelers = 1;
    c.income = {std::log(41600.0), 0.0};
    c.disposable_fraction = 1.0;
    const Population p = synthesize_population(c);
    REQUIRE(p.size() == 1);
    CHECK(p[0].income == doctest::Approx(160.0));
    CHECK(p[0].vot == doctest::Approx(20.0 / 3.0 / 60.0));
  }

  TEST_CASE("hourly wage below the minimum is clamped before the VOT") {
    PopulationConfig c;
    c.n_travelers = 1;
    c.income = {std::log(5.0 * 260 * 8), 0.0};
    const Population p = synthesize_population(c);
    CHECK(p[0].vot == doctest::Approx(7.25 / 3.0 / 60.0));
    CHECK(p[0].income == doctest::Approx(0.6 * 8 * 7.25));
  }

  TEST_CASE("invariants over a synthesized population") {
    PopulationConfig c;
    c.n_travelers = 2000;
    const Population p = synthesize_population(c);
    for (const auto& t : p) {
      CHECK(t.sde_value <= t.vot + 1e-12);
      CHECK(t.vot <= t.sdl_value + 1e-12);
      CHECK(t.scale > 0.0);
      CHECK(t.income > 0.0);
      CHECK(t.wait_value >= 0.0);
      CHECK(t.first_interval <= t.last_interval);
      CHECK(static_cast<int>(t.epsilon.size()) == t.window_size() + 1);
    }
  }

  TEST_CASE("same seed gives a bitwise identical population") {
    PopulationConfig c;
    c.n_travelers = 300;
    std::ostringstream a, b;
    write_population_csv(a, synthesize_population(c));
    write_population_csv(b, synthesize_population(c));
    CHECK(a.str() == b.str());
    c.seed = 2;
    std::ostringstream d;
    write_population_csv(d, synthesize_population(c));
    CHECK(a.str() != d.str());
  }

  TEST_CASE("csv round trip") {
    PopulationConfig c;
    c.n_travelers = 50;
    const Population p = synthesize_population(c);
    std::stringstream s;
    write_population_csv(s, p);
    const Population q = read_population_csv(s);
    REQUIRE(q.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(q[i].income == p[i].income);
      CHECK(q[i].epsilon == p[i].epsilon);
      CHECK(q[i].first_interval == p[i].first_interval);
    }
  }

  TEST_CASE("window rules size the choice set") {
    PopulationConfig c;
    c.n_travelers = 200;
    c.preferred_departure = {450, 10, 400, 500};
    for (const auto& t : synthesize_population(c)) CHECK(t.window_size() == 13);
    c.window_rule = WindowRule::two_eta_span;
    for (const auto& t : synthesize_population(c)) CHECK(t.window_size() == 12);
  }

  TEST_CASE("configuration errors name the field") {
    PopulationConfig c;
    c.sde_ratio = {0.5, 0.1, 1.0};
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("population.sde_ratio"), ConfigError);
    c = {};
    c.disposable_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.n_travelers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.min_hourly_wage = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}
