#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nesyro/engine.hpp"
#include "nesyro/simulator.hpp"

namespace nesyro {

struct SuiteConfig {
  std::vector<std::string> scenario_paths;
  std::vector<ObservabilityLevel> levels;
  std::size_t trials = 10;
  std::uint64_t base_seed = 0;
  Mode mode = Mode::Nesyro;
  std::string backend = "oracle";  // oracle | llm
  EngineConfig engine;
  std::size_t jobs = 1;
  std::string demo_file_override;  // optional; scenarios name their own

  static SuiteConfig from_json(const std::string& json_text);
  std::string to_json() const;
};

struct EpisodeRecord {
  std::string scenario;
  std::string level;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double sr = 0.0;
  double gc = 0.0;
  int ia = 0;
  std::size_t probe_policies = 0;
  std::size_t probe_actions = 0;
  bool aborted = false;
  std::size_t generator_invocations = 0;
  std::size_t invocation_bound = 0;
  bool bound_respected = true;
  bool gate_respected = true;
};

struct CellStats {
  std::string scenario;
  std::string level;
  std::string mode;
  double sr_mean = 0.0;
  double sr_std = 0.0;  // population std
  double gc_mean = 0.0;
  double gc_std = 0.0;
  int ia_total = 0;
  std::size_t probe_policies = 0;
  std::size_t probe_actions = 0;
  std::size_t aborts = 0;
  std::vector<EpisodeRecord> episodes;
};

struct SuiteReport {
  SuiteConfig config;
  std::vector<CellStats> cells;  // ordered by (scenario, level)

  // Stable, schema-versioned JSON. Wall-clock timing is deliberately kept
  // out so identical configs produce byte-identical reports.
  std::string to_json() const;
  std::string to_table() const;

  // Recomputes every aggregate from the per-episode records and compares.
  bool self_consistent() const;
};

// Runs trials for every (scenario, level) cell with per-episode seeds
// derived from base_seed. Scenario load failures abort before any episode
// runs. `jobs > 1` runs episodes on a thread pool; records are merged by
// (scenario, level, trial) so parallelism never changes the report.
SuiteReport run_suite(const SuiteConfig& config);

// Parses a report back from JSON (for the report subcommand round trip).
SuiteReport report_from_json(const std::string& json_text);

struct CalibrationRun {
  double epsilon = 0.0;
  std::vector<CalibrationSample> samples;  // pre-filter, pooled across skills
};

// Threshold calibration against a scenario: for every safe sensing skill,
// `probes_per_skill` seed-varied resets each ground and execute one probe
// call; confidence comes from the stub scorer x logic check, success and
// informativeness from the environment. Pooled samples feed
// calibrate_epsilon.
CalibrationRun calibrate(const Scenario& scenario, const EngineConfig& engine,
                         const DemoLibrary& demos,
                         std::size_t probes_per_skill = 5,
                         std::uint64_t base_seed = 0);

}  // namespace nesyro
