#include "nesyro/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "nesyro/rng.hpp"

namespace nesyro {

namespace {

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double population_std(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

// Fixed-precision numbers in the report keep the JSON byte-stable across
// platforms regardless of double formatting quirks.
double round4(double v) { return std::round(v * 10000.0) / 10000.0; }

}  // namespace

SuiteConfig SuiteConfig::from_json(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  SuiteConfig config;
  for (const auto& p : doc.at("scenarios")) {
    config.scenario_paths.push_back(p.get<std::string>());
  }
  for (const auto& l : doc.at("levels")) {
    config.levels.push_back(parse_level(l.get<std::string>()));
  }
  config.trials = doc.value("trials", 10);
  config.base_seed = doc.value("seed", 0);
  config.mode = parse_mode(doc.value("mode", "nesyro"));
  config.backend = doc.value("backend", "oracle");
  config.jobs = doc.value("jobs", 1);
  config.demo_file_override = doc.value("demo_file", "");
  if (doc.contains("engine")) {
    const auto& e = doc["engine"];
    config.engine.epsilon = e.value("epsilon", config.engine.epsilon);
    config.engine.max_verify_retries =
        e.value("max_verify_retries", config.engine.max_verify_retries);
    config.engine.max_probe_depth =
        e.value("max_probe_depth", config.engine.max_probe_depth);
    config.engine.max_refinements_per_skill =
        e.value("max_refinements_per_skill", config.engine.max_refinements_per_skill);
    config.engine.demo_k = e.value("demo_k", config.engine.demo_k);
    config.engine.planner_limits.max_expanded_states =
        e.value("max_expanded_states",
                config.engine.planner_limits.max_expanded_states);
    config.engine.planner_limits.max_depth =
        e.value("max_depth", config.engine.planner_limits.max_depth);
  }
  config.engine.mode = config.mode;
  return config;
}

std::string SuiteConfig::to_json() const {
  nlohmann::ordered_json doc;
  doc["scenarios"] = scenario_paths;
  doc["levels"] = nlohmann::ordered_json::array();
  for (auto l : levels) doc["levels"].push_back(to_string(l));
  doc["trials"] = trials;
  doc["seed"] = base_seed;
  // jobs is an execution detail, not an experiment parameter; leaving it out
  // keeps reports byte-identical across parallelism settings.
  doc["mode"] = to_string(mode);
  doc["backend"] = backend;
  nlohmann::ordered_json engine_doc;
  engine_doc["epsilon"] = engine.epsilon;
  engine_doc["max_verify_retries"] = engine.max_verify_retries;
  engine_doc["max_probe_depth"] = engine.max_probe_depth;
  engine_doc["max_refinements_per_skill"] = engine.max_refinements_per_skill;
  engine_doc["demo_k"] = engine.demo_k;
  engine_doc["max_expanded_states"] = engine.planner_limits.max_expanded_states;
  engine_doc["max_depth"] = engine.planner_limits.max_depth;
  doc["engine"] = std::move(engine_doc);
  return doc.dump();
}

namespace {

nlohmann::ordered_json episode_to_json(const EpisodeRecord& e) {
  nlohmann::ordered_json doc;
  doc["scenario"] = e.scenario;
  doc["level"] = e.level;
  doc["trial"] = e.trial;
  doc["seed"] = e.seed;
  doc["sr"] = round4(e.sr);
  doc["gc"] = round4(e.gc);
  doc["ia"] = e.ia;
  doc["probe_policies"] = e.probe_policies;
  doc["probe_actions"] = e.probe_actions;
  doc["aborted"] = e.aborted;
  doc["generator_invocations"] = e.generator_invocations;
  doc["invocation_bound"] = e.invocation_bound;
  doc["bound_respected"] = e.bound_respected;
  doc["gate_respected"] = e.gate_respected;
  return doc;
}

EpisodeRecord episode_from_json(const nlohmann::json& doc) {
  EpisodeRecord e;
  e.scenario = doc.at("scenario").get<std::string>();
  e.level = doc.at("level").get<std::string>();
  e.trial = doc.at("trial").get<std::size_t>();
  e.seed = doc.at("seed").get<std::uint64_t>();
  e.sr = doc.at("sr").get<double>();
  e.gc = doc.at("gc").get<double>();
  e.ia = doc.at("ia").get<int>();
  e.probe_policies = doc.at("probe_policies").get<std::size_t>();
  e.probe_actions = doc.at("probe_actions").get<std::size_t>();
  e.aborted = doc.at("aborted").get<bool>();
  e.generator_invocations = doc.at("generator_invocations").get<std::size_t>();
  e.invocation_bound = doc.at("invocation_bound").get<std::size_t>();
  e.bound_respected = doc.at("bound_respected").get<bool>();
  e.gate_respected = doc.at("gate_respected").get<bool>();
  return e;
}

CellStats aggregate_cell(std::string scenario, std::string level,
                         std::string mode, std::vector<EpisodeRecord> episodes) {
  CellStats cell;
  cell.scenario = std::move(scenario);
  cell.level = std::move(level);
  cell.mode = std::move(mode);
  std::vector<double> srs;
  std::vector<double> gcs;
  for (const auto& e : episodes) {
    srs.push_back(e.sr);
    gcs.push_back(e.gc);
    cell.ia_total += e.ia;
    cell.probe_policies += e.probe_policies;
    cell.probe_actions += e.probe_actions;
    if (e.aborted) ++cell.aborts;
  }
  cell.sr_mean = round4(mean_of(srs));
  cell.sr_std = round4(population_std(srs));
  cell.gc_mean = round4(mean_of(gcs));
  cell.gc_std = round4(population_std(gcs));
  cell.episodes = std::move(episodes);
  return cell;
}

}  // namespace

std::string SuiteReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  doc["config"] = nlohmann::ordered_json::parse(config.to_json());
  doc["cells"] = nlohmann::ordered_json::array();
  for (const auto& cell : cells) {
    nlohmann::ordered_json c;
    c["scenario"] = cell.scenario;
    c["level"] = cell.level;
    c["mode"] = cell.mode;
    c["sr_mean"] = round4(cell.sr_mean);
    c["sr_std"] = round4(cell.sr_std);
    c["gc_mean"] = round4(cell.gc_mean);
    c["gc_std"] = round4(cell.gc_std);
    c["ia_total"] = cell.ia_total;
    c["probe_policies"] = cell.probe_policies;
    c["probe_actions"] = cell.probe_actions;
    c["aborts"] = cell.aborts;
    c["episodes"] = nlohmann::ordered_json::array();
    for (const auto& e : cell.episodes) c["episodes"].push_back(episode_to_json(e));
    doc["cells"].push_back(std::move(c));
  }
  return doc.dump(2) + "\n";
}

SuiteReport report_from_json(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  SuiteReport report;
  report.config = SuiteConfig::from_json(doc.at("config").dump());
  for (const auto& c : doc.at("cells")) {
    std::vector<EpisodeRecord> episodes;
    for (const auto& e : c.at("episodes")) episodes.push_back(episode_from_json(e));
    CellStats cell = aggregate_cell(c.at("scenario").get<std::string>(),
                                    c.at("level").get<std::string>(),
                                    c.at("mode").get<std::string>(),
                                    std::move(episodes));
    // Preserve the serialized header so self_consistent() can cross-check.
    cell.sr_mean = c.at("sr_mean").get<double>();
    cell.sr_std = c.at("sr_std").get<double>();
    cell.gc_mean = c.at("gc_mean").get<double>();
    cell.gc_std = c.at("gc_std").get<double>();
    cell.ia_total = c.at("ia_total").get<int>();
    report.cells.push_back(std::move(cell));
  }
  return report;
}

bool SuiteReport::self_consistent() const {
  for (const auto& cell : cells) {
    CellStats redo = aggregate_cell(cell.scenario, cell.level, cell.mode,
                                    cell.episodes);
    if (std::abs(redo.sr_mean - cell.sr_mean) > 1e-9 ||
        std::abs(redo.sr_std - cell.sr_std) > 1e-9 ||
        std::abs(redo.gc_mean - cell.gc_mean) > 1e-9 ||
        std::abs(redo.gc_std - cell.gc_std) > 1e-9 ||
        redo.ia_total != cell.ia_total || redo.aborts != cell.aborts) {
      return false;
    }
  }
  return true;
}

std::string SuiteReport::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(28) << "scenario" << std::setw(12) << "level"
      << std::setw(12) << "mode" << std::setw(16) << "SR" << std::setw(16)
      << "GC" << std::setw(6) << "IA" << std::setw(8) << "probes"
      << std::setw(8) << "aborts" << '\n';
  for (const auto& cell : cells) {
    std::ostringstream sr;
    sr << std::fixed << std::setprecision(1) << cell.sr_mean << "+-"
       << cell.sr_std;
    std::ostringstream gc;
    gc << std::fixed << std::setprecision(1) << cell.gc_mean << "+-"
       << cell.gc_std;
    out << std::left << std::setw(28) << cell.scenario << std::setw(12)
        << cell.level << std::setw(12) << cell.mode << std::setw(16) << sr.str()
        << std::setw(16) << gc.str() << std::setw(6) << cell.ia_total
        << std::setw(8) << cell.probe_policies << std::setw(8) << cell.aborts
        << '\n';
  }
  return out.str();
}

SuiteReport run_suite(const SuiteConfig& config) {
  config.engine.validate();
  if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (config.backend != "oracle" && config.backend != "llm") {
    throw std::invalid_argument("unknown backend: " + config.backend);
  }

  // Fail fast: load every scenario before running anything.
  std::vector<Scenario> scenarios;
  for (const auto& path : config.scenario_paths) {
    scenarios.push_back(load_scenario(path));
  }
  std::vector<DemoLibrary> libraries;
  for (const auto& sc : scenarios) {
    if (!config.demo_file_override.empty()) {
      libraries.push_back(DemoLibrary::from_file(config.demo_file_override));
    } else if (!sc.demo_file.empty()) {
      libraries.push_back(DemoLibrary::from_file(sc.demo_file));
    } else {
      libraries.push_back(DemoLibrary{});
    }
  }

  struct Job {
    std::size_t scenario_idx;
    ObservabilityLevel level;
    std::size_t trial;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (auto level : config.levels) {
      for (std::size_t t = 0; t < config.trials; ++t) {
        jobs.push_back({s, level, t});
      }
    }
  }

  std::vector<EpisodeRecord> records(jobs.size());
  auto run_one = [&](std::size_t j) {
    const Job& job = jobs[j];
    const Scenario& sc = scenarios[job.scenario_idx];
    std::uint64_t seed =
        mix_seed(config.base_seed,
                 (job.scenario_idx << 24) ^
                     (static_cast<std::uint64_t>(job.level) << 16) ^ job.trial);
    EngineConfig engine = config.engine;
    engine.mode = config.mode;
    StubCscBackend stub;
    RunResult run = [&] {
      if (config.backend == "llm") {
        LlmConfig llm = llm_config_from_env();
        auto transport = std::shared_ptr<LlmTransport>(make_http_transport(llm));
        LlmGeneratorBackend backend(llm, transport,
                                    "{goal}\n{observation}\n{feedback}\n"
                                    "{prev_code}\n{frozen_code_part}\n");
        LlmCscBackend csc(llm, transport);
        return run_episode(sc, job.level, seed, engine, backend, csc,
                           libraries[job.scenario_idx]);
      }
      OracleBackend backend(engine.planner_limits);
      return run_episode(sc, job.level, seed, engine, backend, stub,
                         libraries[job.scenario_idx]);
    }();
    EpisodeRecord rec;
    rec.scenario = sc.name;
    rec.level = to_string(job.level);
    rec.trial = job.trial;
    rec.seed = seed;
    rec.sr = run.metrics.sr;
    rec.gc = run.metrics.gc;
    rec.ia = run.metrics.ia;
    rec.probe_actions = run.trajectory.probe_action_count(run.tree);
    for (const auto& node : run.tree) {
      if (node.kind == NodeKind::Probe && node.status == NodeStatus::Executed) {
        ++rec.probe_policies;
      }
    }
    rec.aborted = run.aborted;
    rec.generator_invocations = run.counters.generator_invocations;
    rec.invocation_bound = run.counters.invocation_bound;
    rec.bound_respected = run.counters.bound_respected;
    rec.gate_respected = run.counters.gate_respected;
    records[j] = std::move(rec);
  };

  std::size_t workers = std::max<std::size_t>(1, config.jobs);
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_one(j);
  } else {
    std::vector<std::thread> pool;
    std::size_t cursor = 0;
    std::mutex mtx;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          std::size_t j;
          {
            std::lock_guard<std::mutex> lock(mtx);
            if (cursor >= jobs.size()) return;
            j = cursor++;
          }
          run_one(j);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  SuiteReport report;
  report.config = config;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (auto level : config.levels) {
      std::vector<EpisodeRecord> cell_records;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].scenario_idx == s && jobs[j].level == level) {
          cell_records.push_back(records[j]);
        }
      }
      std::sort(cell_records.begin(), cell_records.end(),
                [](const EpisodeRecord& a, const EpisodeRecord& b) {
                  return a.trial < b.trial;
                });
      report.cells.push_back(aggregate_cell(scenarios[s].name, to_string(level),
                                            to_string(config.mode),
                                            std::move(cell_records)));
    }
  }
  return report;
}

CalibrationRun calibrate(const Scenario& scenario, const EngineConfig& engine,
                         const DemoLibrary& demos, std::size_t probes_per_skill,
                         std::uint64_t base_seed) {
  CalibrationRun run;
  StubCscBackend stub;
  // Complete resets are left out: probing an already-known atom is
  // non-informative by definition and would only starve the filter.
  const std::vector<ObservabilityLevel> variants = {
      ObservabilityLevel::High, ObservabilityLevel::Low,
      ObservabilityLevel::Stochastic};

  std::size_t skill_tag = 0;
  for (const auto& schema : scenario.domain.skills) {
    ++skill_tag;
    if (!schema.meta.safe || !schema.meta.sensing) continue;
    auto bindings = enumerate_bindings(schema, scenario.objects, scenario.domain);
    if (bindings.empty()) continue;

    for (std::size_t p = 0; p < probes_per_skill; ++p) {
      ObservabilityLevel level = variants[p % variants.size()];
      std::uint64_t seed = mix_seed(base_seed, (skill_tag << 8) ^ p);
      Env env(scenario, level, seed);
      ObservationStore obs;
      for (const auto& [atom, value] : env.reset()) obs.merge(atom, value);

      // Vary the probed binding with the trial, preferring one whose
      // revealed atoms are still unknown so the probe can inform.
      std::size_t chosen = p % bindings.size();
      for (std::size_t offset = 0; offset < bindings.size(); ++offset) {
        std::size_t candidate = (p + offset) % bindings.size();
        bool informs = false;
        for (const auto& tmpl : schema.meta.reveals) {
          GroundAtom a = instantiate(tmpl, bindings[candidate]);
          if (obs.lookup(a) == TriValue::Unknown) informs = true;
        }
        if (informs) {
          chosen = candidate;
          break;
        }
      }
      const Binding& binding = bindings[chosen];
      GroundAction action = ground(schema, binding, scenario.objects,
                                   scenario.domain);
      SkillCall call;
      call.name = schema.name;
      call.args = action.args;

      ScoringContext ctx;
      ctx.domain = &scenario.domain;
      ctx.objects = &scenario.objects;
      ctx.obs = &obs;
      ctx.instruction = scenario.instruction;
      ctx.call = call;
      ctx.demos = retrieve_demos(demos, call, obs, engine.demo_k);
      ctx.skill_snippet = call.str();
      double csc = stub.score(ctx).csc;
      int lc = 1;
      for (const auto& [positive, atom] : action.preconditions) {
        TriValue v = obs.lookup(atom);
        bool held = v == TriValue::True;
        if (positive != held) lc = 0;
      }

      std::size_t known_before = obs.known_count();
      StepResult step = env.step(action);
      for (const auto& [atom, value] : step.observation_delta) {
        obs.merge(atom, value);
      }
      CalibrationSample sample;
      sample.confidence = nesyconf(csc, lc);
      sample.probe_success = step.succeeded;
      sample.informative = obs.known_count() > known_before;
      run.samples.push_back(sample);
    }
  }
  run.epsilon = calibrate_epsilon(run.samples);
  return run;
}

}  // namespace nesyro
