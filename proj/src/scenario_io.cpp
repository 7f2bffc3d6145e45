#include "tmc/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace tmc {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void opt(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(at(key), "wrong type");
    }
  }

  template <class T>
  void req(const char* key, T& out) {
    if (!j_.contains(key)) throw ConfigError(at(key), "required field missing");
    opt(key, out);
  }

  template <class T>
  void opt(const char* key, std::optional<T>& out) {
    if (!j_.contains(key) || j_.at(key).is_null()) {
      if (j_.contains(key)) seen_.insert(key);
      return;
    }
    T v{};
    opt(key, v);
    out = v;
  }

  const json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(path_.empty() ? k : path_ + "." + k, "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E parse_enum(const std::string& field, const std::string& s, std::initializer_list<std::pair<const char*, E>> table) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  std::string names;
  for (const auto& [name, value] : table) names += std::string(names.empty() ? "" : ", ") + name;
  throw ConfigError(field, "expected one of " + names);
}

InstrumentKind parse_kind(const std::string& field, const std::string& s) {
  return parse_enum<InstrumentKind>(field, s, {{"NT", InstrumentKind::NT}, {"CP", InstrumentKind::CP}, {"TMC", InstrumentKind::TMC}});
}

template <class F>
void for_objects(const json* arr, const std::string& path, F&& f) {
  if (!arr) return;
  if (!arr->is_array()) throw ConfigError(path, "expected an array");
  for (std::size_t i = 0; i < arr->size(); ++i) f(Reader((*arr)[i], path + "[" + std::to_string(i) + "]"));
}

void read_triangular(const json* j, const std::string& path, Triangular& t) {
  if (!j) return;
  Reader r(*j, path);
  r.opt("low", t.low);
  r.opt("mode", t.mode);
  r.opt("high", t.high);
  r.finish();
}

void read_toll(const json* j, TollProfile& toll) {
  if (!j) return;
  Reader r(*j, "instrument.toll");
  std::vector<double> b, l;
  r.opt("breakpoints", b);
  r.opt("levels", l);
  r.finish();
  if (r.has("breakpoints")) {
    if (b.size() != 6) throw ConfigError("instrument.toll.breakpoints", "expected 6 values");
    std::copy(b.begin(), b.end(), toll.breakpoints.begin());
  }
  if (r.has("levels")) {
    if (l.size() != 5) throw ConfigError("instrument.toll.levels", "expected 5 values");
    std::copy(l.begin(), l.end(), toll.levels.begin());
  }
}

}  // namespace

ScenarioFile scenario_from_json(const json& doc) {
  ScenarioFile f;
  Scenario& s = f.scenario;
  Reader root(doc, "");

  {
    const json* j = root.child("instrument");
    if (!j) throw ConfigError("instrument.kind", "required field missing");
    Reader r(*j, "instrument");
    std::string kind;
    r.req("kind", kind);
    s.instrument.kind = parse_kind("instrument.kind", kind);
    read_toll(r.child("toll"), s.instrument.toll);
    r.finish();
  }
  if (const json* j = root.child("population")) {
    Reader r(*j, "population");
    auto& p = s.population;
    r.opt("n_travelers", p.n_travelers);
    r.opt("seed", p.seed);
    if (const json* inc = r.child("income")) {
      Reader ri(*inc, "population.income");
      ri.opt("mu", p.income.mu);
      ri.opt("sigma", p.income.sigma);
      ri.finish();
    }
    r.opt("min_hourly_wage", p.min_hourly_wage);
    r.opt("disposable_fraction", p.disposable_fraction);
    r.opt("vot_wage_fraction", p.vot_wage_fraction);
    read_triangular(r.child("sde_ratio"), "population.sde_ratio", p.sde_ratio);
    read_triangular(r.child("sdl_ratio"), "population.sdl_ratio", p.sdl_ratio);
    r.opt("wait_value_ratio", p.wait_value_ratio);
    r.opt("scale_mean", p.scale_mean);
    r.opt("scale_cov", p.scale_cov);
    if (const json* pd = r.child("preferred_departure")) {
      Reader rp(*pd, "population.preferred_departure");
      rp.opt("mean", p.preferred_departure.mean);
      rp.opt("sd", p.preferred_departure.sd);
      rp.opt("lower", p.preferred_departure.lower);
      rp.opt("upper", p.preferred_departure.upper);
      rp.finish();
    }
    r.opt("eta_window_min", p.eta_window_min);
    std::string rule;
    r.opt("window_rule", rule);
    if (!rule.empty())
      p.window_rule = parse_enum<WindowRule>("population.window_rule", rule,
                                             {{"plus_minus_eta", WindowRule::plus_minus_eta},
                                              {"two_eta_span", WindowRule::two_eta_span}});
    r.finish();
  }
  if (const json* j = root.child("market")) {
    Reader r(*j, "market");
    auto& m = s.market;
    r.opt("allocation_rate", m.allocation_rate);
    r.opt("lifetime", m.lifetime);
    r.opt("fee_fixed_sell", m.fee_fixed_sell);
    r.opt("fee_fixed_buy", m.fee_fixed_buy);
    r.opt("fee_prop_sell", m.fee_prop_sell);
    r.opt("fee_prop_buy", m.fee_prop_buy);
    r.opt("price_step", m.price_step);
    r.opt("revenue_threshold", m.revenue_threshold);
    r.opt("price_cap", m.price_cap);
    r.opt("initial_price", m.initial_price);
    std::string mode;
    r.opt("allocation_mode", mode);
    if (!mode.empty())
      m.allocation_mode = parse_enum<AllocationMode>(
          "market.allocation_mode", mode,
          {{"continuous", AllocationMode::continuous}, {"lump_sum", AllocationMode::lump_sum}});
    std::string feedback;
    r.opt("price_feedback", feedback);
    if (!feedback.empty())
      m.price_feedback = parse_enum<PriceFeedback>(
          "market.price_feedback", feedback, {{"outlay", PriceFeedback::outlay}, {"revenue", PriceFeedback::revenue}});
    r.finish();
  }
  {
    const json* j = root.child("supply");
    if (!j) throw ConfigError("supply.capacity", "required field missing");
    Reader r(*j, "supply");
    auto& p = s.supply;
    r.req("capacity", p.capacity);
    r.opt("free_flow", p.free_flow);
    r.opt("car_cost", p.car_cost);
    r.opt("pt_time", p.pt_time);
    r.opt("pt_wait", p.pt_wait);
    r.opt("pt_fare", p.pt_fare);
    r.finish();
  }
  if (const json* j = root.child("learning")) {
    Reader r(*j, "learning");
    r.opt("theta_tt", s.theta_tt);
    r.opt("theta_dep", s.theta_dep);
    r.opt("horizon", s.horizon);
    r.opt("convergence_eps", s.convergence_eps);
    r.opt("convergence_window", s.convergence_window);
    r.finish();
  }
  if (const json* j = root.child("choice")) {
    Reader r(*j, "choice");
    r.opt("lambda", s.lambda);
    r.opt("gamma", s.gamma);
    r.opt("arrival_window", s.arrival_window);
    r.finish();
  }
  if (const json* j = root.child("initial")) {
    Reader r(*j, "initial");
    std::string wallets;
    r.opt("wallets", wallets);
    if (!wallets.empty())
      s.initial_wallets = parse_enum<InitialWallets>(
          "initial.wallets", wallets,
          {{"uniform", InitialWallets::uniform}, {"full", InitialWallets::full}, {"empty", InitialWallets::empty}});
    r.opt("tt", s.initial_tt);
    r.opt("daily_jitter", s.daily_jitter);
    r.finish();
  }
  if (const json* j = root.child("events")) {
    Reader r(*j, "events");
    for_objects(r.child("capacity"), "events.capacity", [&](Reader e) {
      CapacityOverride o;
      e.opt("day", o.day);
      e.req("start", o.start);
      e.req("end", o.end);
      e.req("factor", o.factor);
      e.finish();
      s.supply.overrides.push_back(o);
    });
    for_objects(r.child("interventions"), "events.interventions", [&](Reader e) {
      MarketIntervention m;
      e.opt("day", m.day);
      e.req("start", m.start);
      e.req("end", m.end);
      e.opt("price", m.price);
      e.opt("rate", m.rate);
      e.opt("fee_fixed", m.fee_fixed);
      e.finish();
      s.interventions.push_back(m);
    });
    r.finish();
  }
  if (const json* j = root.child("optimizer")) {
    Reader r(*j, "optimizer");
    r.opt("population_size", f.de.population_size);
    r.opt("scale_factor", f.de.scale_factor);
    r.opt("crossover_rate", f.de.crossover_rate);
    r.opt("max_generations", f.de.max_generations);
    r.opt("replications", f.de.replications);
    r.opt("seed", f.de.seed);
    r.opt("max_level", f.toll_max_level);
    r.opt("earliest", f.toll_earliest);
    r.opt("latest", f.toll_latest);
    r.finish();
  }
  root.opt("seed", s.seed);
  root.opt("seeds", f.seeds);
  root.opt("output_dir", s.output_dir);
  root.finish();

  if (f.seeds.empty()) f.seeds.push_back(s.seed);
  f.de.bounds = default_toll_bounds(f.toll_max_level, f.toll_earliest, f.toll_latest);
  s.validate();
  f.de.validate();
  return f;
}

json scenario_to_json(const ScenarioFile& f) {
  const Scenario& s = f.scenario;
  const auto& p = s.population;
  const auto tri = [](const Triangular& t) { return json{{"low", t.low}, {"mode", t.mode}, {"high", t.high}}; };
  json j;
  j["instrument"] = {{"kind", to_string(s.instrument.kind)},
                     {"toll",
                      {{"breakpoints", std::vector<double>(s.instrument.toll.breakpoints.begin(), s.instrument.toll.breakpoints.end())},
                       {"levels", std::vector<double>(s.instrument.toll.levels.begin(), s.instrument.toll.levels.end())}}}};
  j["population"] = {
      {"n_travelers", p.n_travelers},
      {"seed", p.seed},
      {"income", {{"mu", p.income.mu}, {"sigma", p.income.sigma}}},
      {"min_hourly_wage", p.min_hourly_wage},
      {"disposable_fraction", p.disposable_fraction},
      {"vot_wage_fraction", p.vot_wage_fraction},
      {"sde_ratio", tri(p.sde_ratio)},
      {"sdl_ratio", tri(p.sdl_ratio)},
      {"wait_value_ratio", p.wait_value_ratio},
      {"scale_mean", p.scale_mean},
      {"scale_cov", p.scale_cov},
      {"preferred_departure",
       {{"mean", p.preferred_departure.mean},
        {"sd", p.preferred_departure.sd},
        {"lower", p.preferred_departure.lower},
        {"upper", p.preferred_departure.upper}}},
      {"eta_window_min", p.eta_window_min},
      {"window_rule", p.window_rule == WindowRule::plus_minus_eta ? "plus_minus_eta" : "two_eta_span"}};
  const auto& m = s.market;
  j["market"] = {{"allocation_rate", m.allocation_rate},
                 {"lifetime", m.lifetime},
                 {"fee_fixed_sell", m.fee_fixed_sell},
                 {"fee_fixed_buy", m.fee_fixed_buy},
                 {"fee_prop_sell", m.fee_prop_sell},
                 {"fee_prop_buy", m.fee_prop_buy},
                 {"price_step", m.price_step},
                 {"revenue_threshold", m.revenue_threshold},
                 {"price_cap", m.price_cap},
                 {"initial_price", m.initial_price},
                 {"allocation_mode", m.allocation_mode == AllocationMode::continuous ? "continuous" : "lump_sum"},
                 {"price_feedback", m.price_feedback == PriceFeedback::outlay ? "outlay" : "revenue"}};
  const auto& sp = s.supply;
  j["supply"] = {{"capacity", sp.capacity}, {"free_flow", sp.free_flow}, {"car_cost", sp.car_cost},
                 {"pt_time", sp.pt_time},   {"pt_wait", sp.pt_wait},     {"pt_fare", sp.pt_fare}};
  j["learning"] = {{"theta_tt", s.theta_tt},
                   {"theta_dep", s.theta_dep},
                   {"horizon", s.horizon},
                   {"convergence_eps", s.convergence_eps},
                   {"convergence_window", s.convergence_window}};
  j["choice"] = {{"lambda", s.lambda}, {"gamma", s.gamma}, {"arrival_window", s.arrival_window}};
  const char* wallets = s.initial_wallets == InitialWallets::uniform ? "uniform"
                        : s.initial_wallets == InitialWallets::full  ? "full"
                                                                     : "empty";
  j["initial"] = {{"wallets", wallets}, {"tt", s.initial_tt}, {"daily_jitter", s.daily_jitter}};
  json caps = json::array(), ivs = json::array();
  for (const auto& o : sp.overrides) caps.push_back({{"day", o.day}, {"start", o.start}, {"end", o.end}, {"factor", o.factor}});
  for (const auto& iv : s.interventions) {
    json e{{"day", iv.day}, {"start", iv.start}, {"end", iv.end}};
    if (iv.price) e["price"] = *iv.price;
    if (iv.rate) e["rate"] = *iv.rate;
    if (iv.fee_fixed) e["fee_fixed"] = *iv.fee_fixed;
    ivs.push_back(e);
  }
  j["events"] = {{"capacity", caps}, {"interventions", ivs}};
  j["optimizer"] = {{"population_size", f.de.population_size},
                    {"scale_factor", f.de.scale_factor},
                    {"crossover_rate", f.de.crossover_rate},
                    {"max_generations", f.de.max_generations},
                    {"replications", f.de.replications},
                    {"seed", f.de.seed},
                    {"max_level", f.toll_max_level},
                    {"earliest", f.toll_earliest},
                    {"latest", f.toll_latest}};
  j["seed"] = s.seed;
  j["seeds"] = f.seeds;
  j["output_dir"] = s.output_dir;
  return j;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError(key, "empty path component");
    if (!node->is_object()) throw ConfigError(key, "cannot descend into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    pos = dot + 1;
  }
}

ScenarioFile load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open scenario file");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path.string(), "not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  return scenario_from_json(doc);
}

std::uint64_t scenario_hash(const ScenarioFile& file) {
  json j = scenario_to_json(file);
  j.erase("output_dir");
  return fnv1a(j.dump());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json welfare_to_json(const WelfareReport& w) {
  return {{"user_benefit", w.user_benefit},
          {"regulator_revenue", w.regulator_revenue},
          {"social_welfare", w.social_welfare},
          {"gini", w.gini},
          {"negative_gini_inputs", w.negative_gini_inputs},
          {"tti", w.tti ? json(*w.tti) : json(nullptr)},
          {"pt_share", w.pt_share},
          {"buyback_fraction", w.buyback_fraction},
          {"buyback_per_capita", w.buyback_per_capita},
          {"mean_price", w.mean_price},
          {"days", w.days},
          {"converged", w.converged}};
}

namespace {

std::ofstream open_artifact(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string stamp(const ScenarioFile& file) {
  return "# scenario_hash=" + hash_hex(scenario_hash(file)) + " seed=" + std::to_string(file.scenario.seed) + "\n";
}

}  // namespace

void write_run_artifacts(const std::filesystem::path& dir, const ScenarioFile& file, const EquilibriumResult& eq,
                         const WelfareReport* welfare, const Population& pop) {
  std::filesystem::create_directories(dir);
  const Scenario& s = file.scenario;
  const std::string tag = stamp(file);
  const DayResult& last = eq.final_day();

  json summary{{"scenario_hash", hash_hex(scenario_hash(file))},
               {"seed", s.seed},
               {"instrument", to_string(s.instrument.kind)},
               {"converged", eq.converged},
               {"days_run", eq.days_run},
               {"final_norm", eq.norms.empty() ? 0.0 : eq.norms.back()},
               {"final_price", last.price},
               {"car_trips", last.car_trips()},
               {"pt_trips", static_cast<long>(last.travelers.size()) - last.car_trips()}};
  if (welfare) summary["welfare"] = welfare_to_json(*welfare);
  open_artifact(dir / "summary.json") << summary.dump(2) << "\n";

  char buf[256];
  {
    auto out = open_artifact(dir / "days.csv");
    out << tag << "day,norm,price,token_revenue\n";
    for (std::size_t d = 0; d < eq.norms.size(); ++d) {
      std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", d, eq.norms[d], eq.prices[d], eq.token_revenues[d]);
      out << buf;
    }
  }
  {
    auto out = open_artifact(dir / "flows.csv");
    out << tag << "interval,start_minute,car_departures,pt_departures,travel_time,forecast_travel_time\n";
    for (int h = 0; h < kIntervals; ++h) {
      const auto i = static_cast<std::size_t>(h);
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.10g,%.10g\n", h, h * kIntervalMinutes, last.car_departures[i],
                    last.pt_departures[i], last.interval_tt[i], eq.final_state.tt_forecast[i]);
      out << buf;
    }
  }
  {
    std::vector<Transaction> log;
    for (const auto& d : eq.window) log.insert(log.end(), d.transactions.begin(), d.transactions.end());
    auto out = open_artifact(dir / "transactions.csv");
    out << tag;
    write_transactions_csv(out, log);
  }
  if (welfare) {
    json w = welfare_to_json(*welfare);
    w["scenario_hash"] = hash_hex(scenario_hash(file));
    w["seed"] = s.seed;
    open_artifact(dir / "welfare.json") << w.dump(2) << "\n";
    auto out = open_artifact(dir / "benefits.csv");
    out << tag;
    write_benefit_curves(out, *welfare, pop);
  }
}

}  // namespace tmc
