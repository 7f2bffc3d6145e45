#include "tmc/population.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace tmc {

namespace {

void require(bool ok, const char* field, const char* msg) {
  if (!ok) throw ConfigError(std::string("population.") + field, msg);
}

void check_triangular(const Triangular& t, const char* field) {
  require(t.low > 0.0 && t.low <= t.mode && t.mode <= t.high, field, "need 0 < low <= mode <= high");
}

}  // namespace

void PopulationConfig::validate() const {
  require(n_travelers > 0, "n_travelers", "must be positive");
  require(income.sigma >= 0.0 && std::isfinite(income.mu), "income", "sigma must be >= 0");
  require(min_hourly_wage > 0.0, "min_hourly_wage", "must be positive");
  require(disposable_fraction > 0.0 && disposable_fraction <= 1.0, "disposable_fraction", "must lie in (0, 1]");
  require(vot_wage_fraction > 0.0, "vot_wage_fraction", "must be positive");
  check_triangular(sde_ratio, "sde_ratio");
  check_triangular(sdl_ratio, "sdl_ratio");
  require(wait_value_ratio >= 0.0, "wait_value_ratio", "must be >= 0");
  require(scale_mean > 0.0, "scale_mean", "must be positive");
  require(scale_cov >= 0.0, "scale_cov", "must be >= 0");
  const auto& p = preferred_departure;
  require(p.sd > 0.0 && p.lower < p.upper, "preferred_departure", "need sd > 0 and lower < upper");
  require(p.lower >= 0.0 && p.upper < kDayMinutes, "preferred_departure", "bounds must lie inside the day");
  require(eta_window_min >= 0.0, "eta_window_min", "must be >= 0");
}

double tri_inverse_cdf(double u, double low, double mode, double high) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("tri_inverse_cdf: u outside [0, 1]");
  if (!(low <= mode && mode <= high)) throw DomainError("tri_inverse_cdf: need low <= mode <= high");
  const double width = high - low;
  if (width == 0.0) return low;
  const double split = (mode - low) / width;
  if (u < split) return low + std::sqrt(u * width * (mode - low));
  return high - std::sqrt((1.0 - u) * width * (high - mode));
}

double normal_draw(Rng& rng) {
  // Box-Muller, one value per call so that stream consumption is fixed.
  const double u1 = uniform_open(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double lognormal_from_moments(Rng& rng, double mean, double cov) {
  const double s2 = std::log1p(cov * cov);
  const double m = std::log(mean) - 0.5 * s2;
  return std::exp(m + std::sqrt(s2) * normal_draw(rng));
}

double truncated_normal_draw(Rng& rng, const TruncatedNormal& spec) {
  for (int i = 0; i < 1000000; ++i) {
    const double x = spec.mean + spec.sd * normal_draw(rng);
    if (x >= spec.lower && x <= spec.upper) return x;
  }
  throw DomainError("truncated_normal_draw: acceptance region has negligible mass");
}

double gumbel_draw(Rng& rng, double mu) {
  const double u = uniform_open(rng);
  return (-kEulerGamma - std::log(-std::log(u))) / mu;
}

Population synthesize_population(const PopulationConfig& config, double free_flow) {
  config.validate();
  Rng rng = make_stream(config.seed, "population");
  const int eta_steps = static_cast<int>(std::floor(config.eta_window_min / kIntervalMinutes + 1e-9));

  Population pop;
  pop.reserve(static_cast<std::size_t>(config.n_travelers));
  for (int n = 0; n < config.n_travelers; ++n) {
    Traveler t;
    t.id = n;
    const double annual = std::exp(config.income.mu + config.income.sigma * normal_draw(rng));
    const double hourly = std::max(annual / 260.0 / 8.0, config.min_hourly_wage);
    const double daily = 8.0 * hourly;
    t.income = config.disposable_fraction * daily;
    t.vot = config.vot_wage_fraction * hourly / 60.0;
    const auto& e = config.sde_ratio;
    const auto& l = config.sdl_ratio;
    t.sde_value = t.vot * tri_inverse_cdf(uniform01(rng), e.low, e.mode, e.high);
    t.sdl_value = t.vot * tri_inverse_cdf(uniform01(rng), l.low, l.mode, l.high);
    t.wait_value = config.wait_value_ratio * t.vot;
    t.scale = lognormal_from_moments(rng, config.scale_mean, config.scale_cov);

    const double dep = truncated_normal_draw(rng, config.preferred_departure);
    t.preferred_arrival = dep + free_flow;
    const int h0 = interval_of(dep);
    int lo = h0 - eta_steps;
    int hi = config.window_rule == WindowRule::plus_minus_eta ? h0 + eta_steps : h0 + eta_steps - 1;
    hi = std::max(hi, lo);
    t.first_interval = std::clamp(lo, 0, kIntervals - 1);
    t.last_interval = std::clamp(hi, 0, kIntervals - 1);

    t.epsilon.resize(static_cast<std::size_t>(t.window_size() + 1));
    for (double& eps : t.epsilon) eps = gumbel_draw(rng, t.scale);
    pop.push_back(std::move(t));
  }
  return pop;
}

void write_population_csv(std::ostream& out, const Population& pop) {
  out << "id,income,vot,sde_value,sdl_value,wait_value,scale,preferred_arrival,first_interval,"
         "last_interval,epsilon\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& t : pop) {
    out << t.id << ',' << num(t.income) << ',' << num(t.vot) << ',' << num(t.sde_value) << ','
        << num(t.sdl_value) << ',' << num(t.wait_value) << ',' << num(t.scale) << ','
        << num(t.preferred_arrival) << ',' << t.first_interval << ',' << t.last_interval << ',';
    for (std::size_t k = 0; k < t.epsilon.size(); ++k) out << (k ? ";" : "") << num(t.epsilon[k]);
    out << '\n';
  }
}

Population read_population_csv(std::istream& in) {
  Population pop;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("population_csv", "empty file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw ConfigError("population_csv", "expected 11 columns: " + line);
    Traveler t;
    t.id = std::stoi(cells[0]);
    t.income = std::stod(cells[1]);
    t.vot = std::stod(cells[2]);
    t.sde_value = std::stod(cells[3]);
    t.sdl_value = std::stod(cells[4]);
    t.wait_value = std::stod(cells[5]);
    t.scale = std::stod(cells[6]);
    t.preferred_arrival = std::stod(cells[7]);
    t.first_interval = std::stoi(cells[8]);
    t.last_interval = std::stoi(cells[9]);
    std::istringstream eps(cells[10]);
    while (std::getline(eps, cell, ';')) t.epsilon.push_back(std::stod(cell));
    if (static_cast<int>(t.epsilon.size()) != t.window_size() + 1)
      throw ConfigError("population_csv", "epsilon count does not match window");
    pop.push_back(std::move(t));
  }
  return pop;
}

}  // namespace tmc
