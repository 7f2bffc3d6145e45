#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tmc/engine.hpp"
#include "tmc/metrics.hpp"
#include "tmc/optimizer.hpp"

namespace tmc {

// Everything a scenario file can carry beyond the simulation itself.
struct ScenarioFile {
  Scenario scenario;
  std::vector<std::uint64_t> seeds;  // replications for `compare`; defaults to {scenario.seed}
  DEConfig de;
  double toll_max_level = 10.0;
  double toll_earliest = 300.0;
  double toll_latest = 660.0;
};

// Strict conversion: unknown keys and wrong types throw ConfigError with the
// dotted path of the offending field. `instrument.kind` and
// `supply.capacity` are required.
ScenarioFile scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioFile& file);

// Applies "a.b.c=value" to a parsed document. The value is read as JSON when
// it parses, else as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ScenarioFile load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// FNV-1a over the canonical dump, so equivalent files hash alike.
std::uint64_t scenario_hash(const ScenarioFile& file);
std::string hash_hex(std::uint64_t h);

// Writes summary.json, days.csv, flows.csv, transactions.csv, welfare.json
// and benefits.csv (the last two only when `welfare` is given).
void write_run_artifacts(const std::filesystem::path& dir, const ScenarioFile& file, const EquilibriumResult& eq,
                         const WelfareReport* welfare, const Population& pop);

nlohmann::json welfare_to_json(const WelfareReport& w);

}  // namespace tmc
