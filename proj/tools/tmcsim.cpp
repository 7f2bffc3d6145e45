#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tmc/experiments.hpp"
#include "tmc/optimizer.hpp"
#include "tmc/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace tmc;

namespace {

struct Common {
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--set", c.sets, "dotted override, e.g. market.allocation_rate=0.0025");
  cmd->add_option("--seed", c.seed, "simulation seed");
  cmd->add_option("--horizon", c.horizon, "maximum number of days");
  cmd->add_option("--out", c.out, "output directory");
}

ScenarioFile load(const std::string& path, const Common& c) {
  std::vector<std::string> sets = c.sets;
  if (c.seed) {
    sets.push_back("seed=" + std::to_string(*c.seed));
    sets.push_back("seeds=[" + std::to_string(*c.seed) + "]");
  }
  if (c.horizon) sets.push_back("learning.horizon=" + std::to_string(*c.horizon));
  ScenarioFile f = load_scenario(path, sets);
  if (!c.out.empty()) f.scenario.output_dir = c.out;
  return f;
}

std::shared_ptr<const Population> population_for(const Scenario& s) {
  return std::make_shared<const Population>(synthesize_population(s.population, s.supply.free_flow));
}

std::mutex console;
void say(const std::string& line) {
  std::lock_guard<std::mutex> lock(console);
  std::cout << line << std::endl;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int cmd_run(const std::string& path, const Common& c) {
  ScenarioFile f = load(path, c);
  const Scenario& s = f.scenario;
  auto pop = population_for(s);
  InstrumentOutcome out;
  if (s.instrument.kind == InstrumentKind::NT) {
    Simulation sim(s, pop);
    out.equilibrium = sim.run_to_equilibrium();
    out.welfare = compute_welfare(out.equilibrium, out.equilibrium, *pop, s.supply.free_flow);
  } else {
    out = evaluate(s, pop);
  }
  write_run_artifacts(s.output_dir, f, out.equilibrium, &out.welfare, *pop);
  say(std::string(to_string(s.instrument.kind)) + (out.equilibrium.converged ? " converged" : " did not converge") +
      " after " + std::to_string(out.equilibrium.days_run) + " days; SW " + fmt("%.2f", out.welfare.social_welfare) +
      ", artifacts in " + s.output_dir);
  return 0;
}

bool parse_grid(const std::string& spec, std::vector<double>& grid) {
  double lo, hi, step;
  char c1, c2;
  std::istringstream in(spec);
  if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0 || hi < lo) return false;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int k = 0; k <= n; ++k) grid.push_back(lo + k * step);
  return true;
}

int cmd_optimize(const std::string& path, const Common& c, bool sphere, const std::string& grid_spec,
                 std::optional<int> generations) {
  if (sphere) {
    DEConfig cfg = sphere_config(c.seed.value_or(1));
    if (generations) cfg.max_generations = *generations;
    const DEResult r = sphere_self_test(cfg);
    const double dist = std::sqrt(-r.best_fitness);
    if (!c.out.empty()) {
      fs::create_directories(c.out);
      std::ofstream trace(fs::path(c.out) / "sphere_trace.csv");
      write_trace_csv(trace, r.trace);
    }
    say("sphere: distance to optimum " + fmt("%.3g", dist) + " after " + std::to_string(cfg.max_generations) +
        " generations");
    return dist <= 1e-3 ? 0 : 3;
  }
  if (path.empty()) throw ConfigError("scenario", "a scenario file is required");
  ScenarioFile f = load(path, c);
  Scenario& s = f.scenario;
  if (s.instrument.kind == InstrumentKind::NT) throw ConfigError("instrument.kind", "nothing to optimize");
  if (generations) f.de.max_generations = *generations;
  auto pop = population_for(s);
  fs::create_directories(s.output_dir);
  const std::string tag = "# scenario_hash=" + hash_hex(scenario_hash(f)) + " seed=" + std::to_string(s.seed) + "\n";

  if (!grid_spec.empty()) {
    std::vector<double> grid;
    if (!parse_grid(grid_spec, grid)) throw ConfigError("--grid-allocation", "expected lo:hi:step");
    if (s.instrument.kind != InstrumentKind::TMC) throw ConfigError("instrument.kind", "grid search needs TMC");
    // Grid points scale the scenario's own rate.
    std::vector<double> rates;
    for (double m : grid) rates.push_back(m * s.market.allocation_rate);
    const GridSearchResult g = grid_search_allocation(s, rates, pop);
    std::ofstream out(fs::path(s.output_dir) / "grid.csv", std::ios::binary);
    out << tag << "multiplier,allocation_rate,social_welfare,mean_price\n";
    char buf[160];
    for (std::size_t k = 0; k < g.rates.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.6g,%.10g,%.10g,%.10g\n", grid[k], g.rates[k], g.welfare[k], g.prices[k]);
      out << buf;
    }
    say("best allocation rate " + fmt("%.6g", g.best_rate) + ", SW " + fmt("%.2f", g.best_welfare));
    return 0;
  }

  const TollOptimization r = optimize_toll(s, f.de, pop);
  nlohmann::json best{{"scenario_hash", hash_hex(scenario_hash(f))},
                      {"seed", s.seed},
                      {"instrument", to_string(s.instrument.kind)},
                      {"social_welfare", r.welfare},
                      {"unconverged_evaluations", r.unconverged_evaluations},
                      {"toll",
                       {{"breakpoints", std::vector<double>(r.best.breakpoints.begin(), r.best.breakpoints.end())},
                        {"levels", std::vector<double>(r.best.levels.begin(), r.best.levels.end())}}}};
  std::ofstream(fs::path(s.output_dir) / "best_toll.json", std::ios::binary) << best.dump(2) << "\n";
  std::ofstream trace(fs::path(s.output_dir) / "trace.csv", std::ios::binary);
  trace << tag;
  write_trace_csv(trace, r.search.trace);
  say("best SW " + fmt("%.2f", r.welfare) + " after " + std::to_string(r.search.evaluations) + " evaluations");
  return 0;
}

struct Stats {
  double mean = 0.0, sd = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

int cmd_compare(const std::vector<std::string>& paths, const Common& c) {
  std::vector<ScenarioFile> files;
  for (const auto& p : paths) files.push_back(load(p, c));
  const auto& base = files[0].scenario;
  const std::string kinds[3] = {"NT", "CP", "TMC"};
  for (std::size_t k = 0; k < 3; ++k) {
    if (to_string(files[k].scenario.instrument.kind) != kinds[k])
      throw ConfigError("instrument.kind", paths[k] + " should be " + kinds[k]);
    if (files[k].scenario.population.seed != base.population.seed ||
        files[k].scenario.population.n_travelers != base.population.n_travelers)
      throw ConfigError("population.seed", "scenarios must share the population");
    if (files[k].seeds != files[0].seeds) throw ConfigError("seeds", "scenarios must share the seed list");
  }
  auto pop = population_for(base);
  const auto& seeds = files[0].seeds;
  const std::string out_dir = c.out.empty() ? base.output_dir : c.out;
  fs::create_directories(out_dir);

  // welfare[instrument][seed]
  std::vector<std::vector<WelfareReport>> reports(3, std::vector<WelfareReport>(seeds.size()));
  parallel_for(static_cast<int>(seeds.size()), [&](int i) {
    const auto si = static_cast<std::size_t>(i);
    Scenario nt = files[0].scenario;
    nt.seed = seeds[si];
    Simulation sim(nt, pop);
    const EquilibriumResult nt_eq = sim.run_to_equilibrium();
    reports[0][si] = compute_welfare(nt_eq, nt_eq, *pop, nt.supply.free_flow);
    for (std::size_t k = 1; k < 3; ++k) {
      Scenario s = files[k].scenario;
      s.seed = seeds[si];
      reports[k][si] = evaluate(s, pop, &nt_eq).welfare;
    }
    say("seed " + std::to_string(seeds[si]) + " done");
  });

  std::string tag = "# scenario_hash=";
  for (std::size_t k = 0; k < 3; ++k) tag += (k ? "," : "") + hash_hex(scenario_hash(files[k]));
  tag += " seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) tag += (i ? ";" : "") + std::to_string(seeds[i]);
  tag += "\n";

  std::ofstream table(fs::path(out_dir) / "comparison.csv", std::ios::binary);
  table << tag
        << "instrument,seeds,sw_mean,sw_sd,z_mean,z_sd,k_mean,k_sd,gini_mean,gini_sd,tti_mean,tti_sd,pt_share_mean,"
           "pt_share_sd,buyback_fraction_mean,buyback_fraction_sd,price_mean,price_sd,converged\n";
  char buf[128];
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> sw, z, kk, g, t, pt, bb, pr;
    bool all = true;
    for (const auto& r : reports[k]) {
      sw.push_back(r.social_welfare);
      z.push_back(r.user_benefit);
      kk.push_back(r.regulator_revenue);
      g.push_back(r.gini);
      t.push_back(r.tti.value_or(NAN));
      pt.push_back(r.pt_share);
      bb.push_back(r.buyback_fraction);
      pr.push_back(r.mean_price);
      all = all && r.converged;
    }
    table << kinds[k] << "," << seeds.size();
    for (const auto* v : {&sw, &z, &kk, &g, &t, &pt, &bb, &pr}) {
      const Stats st = stats(*v);
      std::snprintf(buf, sizeof buf, ",%.10g,%.10g", st.mean, st.sd);
      table << buf;
    }
    table << "," << (all ? 1 : 0) << "\n";
    if (k > 0) {
      std::ofstream curve(fs::path(out_dir) / ("benefits_" + kinds[k] + ".csv"), std::ios::binary);
      curve << tag;
      write_benefit_curves(curve, reports[k][0], *pop);
    }
  }
  say("comparison written to " + (fs::path(out_dir) / "comparison.csv").string());
  return 0;
}

int cmd_elasticity(const std::string& path, const Common& c, const std::vector<double>& tolls, bool equilibrium) {
  ScenarioFile f = load(path, c);
  if (f.scenario.instrument.kind != InstrumentKind::CP) throw ConfigError("instrument.kind", "elasticity needs CP");
  ElasticityOptions opt;
  opt.equilibrium = equilibrium;
  const auto rows = elasticity_table(f.scenario, tolls, opt);
  fs::create_directories(f.scenario.output_dir);
  std::ofstream out(fs::path(f.scenario.output_dir) / "elasticity.csv", std::ios::binary);
  out << "# scenario_hash=" << hash_hex(scenario_hash(f)) << " seed=" << f.scenario.seed << "\n";
  write_elasticity_csv(out, rows);
  for (const auto& r : rows) say("toll " + fmt("%.2f", r.toll) + ": " + fmt("%.3f", r.total));
  return 0;
}

int cmd_synth(const std::string& path, const Common& c) {
  ScenarioFile f = load(path, c);
  auto pop = population_for(f.scenario);
  fs::create_directories(f.scenario.output_dir);
  std::ofstream out(fs::path(f.scenario.output_dir) / "population.csv", std::ios::binary);
  out << "# scenario_hash=" << hash_hex(scenario_hash(f)) << " seed=" << f.scenario.population.seed << "\n";
  write_population_csv(out, *pop);
  say(std::to_string(pop->size()) + " travelers written");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Day-to-day bottleneck simulator for tolls and tradable mobility credits"};
  app.require_subcommand(1);

  Common common;
  std::string path;

  auto* run = app.add_subcommand("run", "run one scenario to equilibrium");
  run->add_option("scenario", path)->required();
  add_common(run, common);

  bool sphere = false;
  std::string grid;
  std::optional<int> generations;
  auto* opt = app.add_subcommand("optimize", "search step tolls or allocation rates");
  opt->add_option("scenario", path);
  opt->add_flag("--sphere", sphere, "run the optimizer self-test instead");
  opt->add_option("--grid-allocation", grid, "lo:hi:step multipliers of the allocation rate, toll held fixed");
  opt->add_option("--generations", generations, "override the generation budget");
  add_common(opt, common);

  std::vector<std::string> triple;
  auto* cmp = app.add_subcommand("compare", "NT, CP and TMC over the seed list");
  cmp->add_option("scenarios", triple, "nt.json cp.json tmc.json")->required()->expected(3);
  add_common(cmp, common);

  std::vector<double> tolls{0.0, 2.5, 5.0};
  bool equilibrium = false;
  auto* el = app.add_subcommand("elasticity", "peak-hour price elasticities by income group");
  el->add_option("scenario", path)->required();
  el->add_option("--tolls", tolls, "flat toll levels")->delimiter(',');
  el->add_flag("--equilibrium", equilibrium, "re-equilibrate at each perturbed price");
  add_common(el, common);

  auto* syn = app.add_subcommand("synth", "dump the synthetic population");
  syn->add_option("scenario", path)->required();
  add_common(syn, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(path, common);
    if (*opt) return cmd_optimize(path, common, sphere, grid, generations);
    if (*cmp) return cmd_compare(triple, common);
    if (*el) return cmd_elasticity(path, common, tolls, equilibrium);
    if (*syn) return cmd_synth(path, common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
