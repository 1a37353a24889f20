#include "doctest.h"

#include "nesyro/harness.hpp"

using namespace nesyro;

#ifndef NESYRO_SOURCE_DIR
#define NESYRO_SOURCE_DIR "."
#endif

namespace {

const std::string kScenarioDir = std::string(NESYRO_SOURCE_DIR) + "/scenarios/";

SuiteConfig small_config(const std::string& scenario, ObservabilityLevel level,
                         Mode mode, std::size_t trials = 3) {
  SuiteConfig config;
  config.scenario_paths = {kScenarioDir + scenario};
  config.levels = {level};
  config.trials = trials;
  config.mode = mode;
  config.engine.mode = mode;
  return config;
}

}  // namespace

TEST_CASE("uniform success aggregates to mean 100 std 0") {
  SuiteReport report = run_suite(
      small_config("object_interaction.json", ObservabilityLevel::High,
                   Mode::Nesyro));
  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].sr_mean == 100.0);
  CHECK(report.cells[0].sr_std == 0.0);
  CHECK(report.cells[0].episodes.size() == 3);
  CHECK(report.self_consistent());
}

TEST_CASE("population standard deviation over a split outcome") {
  // Two episodes, one success and one failure, via handcrafted records.
  const std::string report_json = R"x({
    "schema_version": 1,
    "config": {"scenarios": ["x"], "levels": ["high"], "trials": 2,
               "seed": 0, "mode": "nesyro", "backend": "oracle", "jobs": 1},
    "cells": [{
      "scenario": "x", "level": "high", "mode": "nesyro",
      "sr_mean": 50.0, "sr_std": 50.0, "gc_mean": 50.0, "gc_std": 50.0,
      "ia_total": 1, "probe_policies": 0, "probe_actions": 0, "aborts": 1,
      "episodes": [
        {"scenario": "x", "level": "high", "trial": 0, "seed": 1, "sr": 100.0,
         "gc": 100.0, "ia": 0, "probe_policies": 0, "probe_actions": 0,
         "aborted": false, "generator_invocations": 1, "invocation_bound": 10,
         "bound_respected": true, "gate_respected": true},
        {"scenario": "x", "level": "high", "trial": 1, "seed": 2, "sr": 0.0,
         "gc": 0.0, "ia": 1, "probe_policies": 0, "probe_actions": 0,
         "aborted": true, "generator_invocations": 1, "invocation_bound": 10,
         "bound_respected": true, "gate_respected": true}
      ]
    }]
  })x";
  SuiteReport report = report_from_json(report_json);
  CHECK(report.self_consistent());

  // A tampered header no longer matches its records.
  std::string corrupted = report_json;
  corrupted.replace(corrupted.find("\"sr_mean\": 50.0"), 15, "\"sr_mean\": 60.0");
  CHECK_FALSE(report_from_json(corrupted).self_consistent());
}

TEST_CASE("reports round trip through json") {
  SuiteReport report = run_suite(
      small_config("object_interaction.json", ObservabilityLevel::Complete,
                   Mode::Nesyro, 2));
  std::string json = report.to_json();
  SuiteReport reparsed = report_from_json(json);
  CHECK(reparsed.to_json() == json);
  CHECK(reparsed.self_consistent());
}

TEST_CASE("table output carries one row per cell") {
  SuiteConfig config = small_config("object_interaction.json",
                                    ObservabilityLevel::Complete, Mode::Nesyro, 2);
  config.scenario_paths.push_back(kScenarioDir + "object_relocation.json");
  SuiteReport report = run_suite(config);
  std::string table = report.to_table();
  CHECK(table.find("object_interaction") != std::string::npos);
  CHECK(table.find("object_relocation") != std::string::npos);
}

TEST_CASE("identical configs produce byte-identical reports") {
  SuiteConfig config = small_config("object_interaction.json",
                                    ObservabilityLevel::Stochastic, Mode::Nesyro, 4);
  std::string first = run_suite(config).to_json();
  std::string second = run_suite(config).to_json();
  CHECK(first == second);
}

TEST_CASE("parallel execution never changes the report") {
  SuiteConfig config = small_config("object_interaction.json",
                                    ObservabilityLevel::High, Mode::Nesyro, 4);
  config.levels.push_back(ObservabilityLevel::Complete);
  std::string serial = run_suite(config).to_json();
  config.jobs = 4;
  std::string parallel = run_suite(config).to_json();
  CHECK(serial == parallel);
}

TEST_CASE("naive episodes record no confidence and no probes") {
  SuiteReport report = run_suite(
      small_config("object_interaction.json", ObservabilityLevel::High,
                   Mode::Naive));
  for (const auto& cell : report.cells) {
    CHECK(cell.probe_policies == 0);
    CHECK(cell.probe_actions == 0);
  }
}

TEST_CASE("missing scenario files fail before any episode runs") {
  SuiteConfig config = small_config("ghost.json", ObservabilityLevel::High,
                                    Mode::Nesyro);
  CHECK_THROWS(run_suite(config));
}

TEST_CASE("threshold calibration runs probes and pools samples") {
  Scenario sc = load_scenario(kScenarioDir + "object_interaction.json");
  DemoLibrary demos = DemoLibrary::from_file(sc.demo_file);
  EngineConfig engine;
  CalibrationRun run = calibrate(sc, engine, demos, 5, 0);
  CHECK(run.samples.size() == 5);  // one sensing skill, five probes
  CHECK(run.epsilon > 0.0);
  CHECK(run.epsilon <= 1.0);

  // Same seed, same threshold.
  CalibrationRun again = calibrate(sc, engine, demos, 5, 0);
  CHECK(run.epsilon == again.epsilon);
}
