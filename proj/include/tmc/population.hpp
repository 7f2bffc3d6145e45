#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tmc/common.hpp"

namespace tmc {

struct Triangular {
  double low = 0.0;
  double mode = 0.0;
  double high = 0.0;
};

struct Lognormal {
  double mu = 0.0;     // of the underlying normal
  double sigma = 0.0;  // of the underlying normal
};

struct TruncatedNormal {
  double mean = 450.0;
  double sd = 39.0;
  double lower = 240.0;
  double upper = 675.0;
};

// How the departure window around the preferred interval is sized.
enum class WindowRule {
  plus_minus_eta,  // every interval within +-eta minutes of the preferred one (13 for eta = 30)
  two_eta_span,    // 2*eta/5 intervals starting eta minutes early (12 for eta = 30)
};

struct PopulationConfig {
  int n_travelers = 7500;
  Lognormal income{11.0, 1.127};
  double min_hourly_wage = 7.25;
  double disposable_fraction = 0.6;
  double vot_wage_fraction = 1.0 / 3.0;
  Triangular sde_ratio{0.1, 0.5, 1.0};
  Triangular sdl_ratio{1.0, 2.0, 3.0};
  double wait_value_ratio = 3.0;
  double scale_mean = 0.5;
  double scale_cov = 0.5;
  TruncatedNormal preferred_departure{};
  double eta_window_min = 30.0;
  WindowRule window_rule = WindowRule::plus_minus_eta;
  std::uint64_t seed = 1;

  // Throws ConfigError naming the first offending field (prefixed "population.").
  void validate() const;
};

struct Traveler {
  int id = 0;
  double income = 0.0;       // daily disposable income, $
  double vot = 0.0;          // $/min
  double sde_value = 0.0;    // $/min
  double sdl_value = 0.0;    // $/min
  double wait_value = 0.0;   // $/min
  double scale = 1.0;        // logit scale
  double preferred_arrival = 0.0;  // minute of day
  int first_interval = 0;
  int last_interval = 0;
  // One draw per car interval of the window, in order, then one for PT.
  std::vector<double> epsilon;

  int window_size() const { return last_interval - first_interval + 1; }
  double car_epsilon(int h) const { return epsilon[static_cast<std::size_t>(h - first_interval)]; }
  double pt_epsilon() const { return epsilon.back(); }
};

using Population = std::vector<Traveler>;

double tri_inverse_cdf(double u, double low, double mode, double high);

// Standard-normal and derived draws used by the synthesizer.
double normal_draw(Rng& rng);
double lognormal_from_moments(Rng& rng, double mean, double cov);
double truncated_normal_draw(Rng& rng, const TruncatedNormal& spec);
// Zero-mean Gumbel draw with scale 1/mu.
double gumbel_draw(Rng& rng, double mu);

// `free_flow` converts the preferred departure into a preferred arrival time.
Population synthesize_population(const PopulationConfig& config, double free_flow = 24.0);

void write_population_csv(std::ostream& out, const Population& pop);
Population read_population_csv(std::istream& in);

}  // namespace tmc
