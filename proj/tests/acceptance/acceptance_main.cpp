// Acceptance suite: one criterion per section, one pass/fail line each.
// Everything runs against the deterministic oracle backend and the bundled
// scenario fixtures; no external service is contacted.

#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "nesyro/engine.hpp"
#include "nesyro/harness.hpp"
#include "nesyro/rng.hpp"
#include "nesyro/simulator.hpp"

#include "support/exhaustive_oracle.hpp"
#include "support/generators.hpp"
#include "support/violation_oracle.hpp"

#ifndef NESYRO_SOURCE_DIR
#define NESYRO_SOURCE_DIR "."
#endif

using namespace nesyro;

namespace {

const std::string kScenarioDir = std::string(NESYRO_SOURCE_DIR) + "/scenarios/";
int g_failures = 0;

class Criterion {
 public:
  Criterion(int id, std::string label) : id_(id), label_(std::move(label)) {
    start_ = std::chrono::steady_clock::now();
  }

  void require(bool ok, const std::string& detail) {
    if (!ok) {
      failed_ = true;
      details_.push_back(detail);
    }
  }

  ~Criterion() {
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start_)
                       .count();
    std::cout << (failed_ ? "[FAIL] " : "[PASS] ") << "criterion " << id_
              << ": " << label_ << " (" << elapsed << " ms)\n";
    for (const auto& d : details_) std::cout << "       - " << d << "\n";
    if (failed_) ++g_failures;
  }

 private:
  int id_;
  std::string label_;
  bool failed_ = false;
  std::vector<std::string> details_;
  std::chrono::steady_clock::time_point start_;
};

RunResult run_one(const Scenario& scenario, const DemoLibrary& demos,
                  ObservabilityLevel level, std::uint64_t seed, Mode mode) {
  EngineConfig config;
  config.mode = mode;
  OracleBackend backend(config.planner_limits);
  StubCscBackend csc;
  return run_episode(scenario, level, seed, config, backend, csc, demos);
}

std::size_t executed_probe_nodes(const RunResult& r) {
  std::size_t n = 0;
  for (const auto& node : r.tree) {
    if (node.kind == NodeKind::Probe && node.status == NodeStatus::Executed) ++n;
  }
  return n;
}

double mean_sr(const std::vector<RunResult>& runs) {
  double sum = 0.0;
  for (const auto& r : runs) sum += r.metrics.sr;
  return runs.empty() ? 0.0 : sum / static_cast<double>(runs.size());
}

}  // namespace

int main() {
  // 1. Locked-drawer fixture, High incompleteness: validation probes once
  //    and succeeds cleanly, naive execution damages the drawer and fails.
  {
    Criterion c(1, "locked drawer: one probe and success vs naive damage");
    Scenario sc = load_scenario(kScenarioDir + "object_interaction.json");
    DemoLibrary demos = DemoLibrary::from_file(sc.demo_file);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RunResult full = run_one(sc, demos, ObservabilityLevel::High, seed,
                               Mode::Nesyro);
      c.require(full.metrics.sr == 100.0,
                "nesyro SR != 100 at seed " + std::to_string(seed));
      c.require(full.metrics.ia == 0,
                "nesyro IA != 0 at seed " + std::to_string(seed));
      c.require(executed_probe_nodes(full) == 1,
                "nesyro probe count != 1 at seed " + std::to_string(seed));

      RunResult naive = run_one(sc, demos, ObservabilityLevel::High, seed,
                                Mode::Naive);
      c.require(naive.metrics.sr == 0.0,
                "naive SR != 0 at seed " + std::to_string(seed));
      c.require(naive.metrics.ia >= 1,
                "naive IA < 1 at seed " + std::to_string(seed));
    }
  }

  // 2. Complete observability: four fixtures spanning every probe type run
  //    with zero probe actions and full success.
  {
    Criterion c(2, "complete observability needs no probes");
    for (const auto& name :
         {"object_relocation.json", "object_interaction.json",
          "aux_room_lit.json", "long_horizon_simple.json"}) {
      Scenario sc = load_scenario(kScenarioDir + name);
      DemoLibrary demos = DemoLibrary::from_file(sc.demo_file);
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RunResult r = run_one(sc, demos, ObservabilityLevel::Complete, seed,
                              Mode::Nesyro);
        c.require(r.metrics.sr == 100.0,
                  std::string(name) + ": SR != 100 at seed " +
                      std::to_string(seed));
        c.require(r.trajectory.probe_action_count(r.tree) == 0,
                  std::string(name) + ": probe actions != 0 at seed " +
                      std::to_string(seed));
      }
    }
  }

  // 3. Dark room: the lock probe only grounds after a nested light probe,
  //    giving a depth-2 tree with two executed probe policies.
  {
    Criterion c(3, "dark room produces a depth-2 probe tree");
    Scenario sc = load_scenario(kScenarioDir + "aux_dark_room.json");
    DemoLibrary demos = DemoLibrary::from_file(sc.demo_file);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RunResult r = run_one(sc, demos, ObservabilityLevel::High, seed,
                            Mode::Nesyro);
      std::size_t depth = 0;
      for (const auto& node : r.tree) depth = std::max(depth, node.depth);
      c.require(r.metrics.sr == 100.0,
                "SR != 100 at seed " + std::to_string(seed));
      c.require(depth == 2, "tree depth != 2 at seed " + std::to_string(seed));
      c.require(executed_probe_nodes(r) == 2,
                "executed probe nodes != 2 at seed " + std::to_string(seed));
    }
  }

  // 4. Ablations on the long-horizon fixture, High and Low averaged: the
  //    full product beats both single-factor gates and the naive baseline.
  {
    Criterion c(4, "ablation ordering on the long-horizon fixture");
    Scenario sc = load_scenario(kScenarioDir + "long_horizon.json");
    DemoLibrary demos = DemoLibrary::from_file(sc.demo_file);
    std::map<Mode, std::vector<RunResult>> runs;
    for (Mode mode : {Mode::Nesyro, Mode::NoLc, Mode::NoCsc, Mode::Naive}) {
      for (auto level : {ObservabilityLevel::High, ObservabilityLevel::Low}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
          runs[mode].push_back(run_one(sc, demos, level, seed, mode));
        }
      }
    }
    double full = mean_sr(runs[Mode::Nesyro]);
    c.require(full > mean_sr(runs[Mode::NoLc]), "SR(nesyro) <= SR(no_lc)");
    c.require(full > mean_sr(runs[Mode::NoCsc]), "SR(nesyro) <= SR(no_csc)");
    c.require(full > mean_sr(runs[Mode::Naive]), "SR(nesyro) <= SR(naive)");
  }

  // 5. Planner equivalence: 200 random micro-domains against an independent
  //    exhaustive breadth-first oracle, solvability and optimal length.
  {
    Criterion c(5, "planner agrees with the exhaustive oracle on 200 domains");
    Rng rng(0xACCE5);
    int solvable = 0;
    for (int round = 0; round < 200; ++round) {
      testing::MicroProblem p = testing::random_micro_problem(rng);
      testing::OracleOutcome oracle =
          testing::exhaustive_bfs(p.domain, p.objects, p.init, p.goal);
      SymbolicState init{p.init};
      SearchResult mine = search_plan(p.domain, p.objects, init, p.goal);
      c.require(mine.status != SearchStatus::LimitExceeded,
                "limit exceeded in round " + std::to_string(round));
      c.require((mine.status == SearchStatus::Found) == oracle.solvable,
                "solvability mismatch in round " + std::to_string(round));
      if (oracle.solvable && mine.plan) {
        ++solvable;
        c.require(mine.plan->cost() == oracle.optimal_length,
                  "length mismatch in round " + std::to_string(round));
      }
    }
    c.require(solvable >= 20, "generator produced too few solvable instances");
  }

  // 6. Verifier fuzz: 1000 random mutations against the straight-line
  //    reference checker; identical verdicts and earliest violation indexes.
  {
    Criterion c(6, "verifier agrees with the reference on 1000 mutations");
    Scenario sc = load_scenario(kScenarioDir + "long_horizon.json");
    std::vector<std::string> names;
    for (const auto& [name, type] : sc.objects) names.push_back(name);
    ObservationStore obs;
    obs.merge(parse_ground_atom("(unlocked top_drawer)"), true);
    obs.merge(parse_ground_atom("(unlocked middle_drawer)"), false);
    obs.merge(parse_ground_atom("(on item_4 table)"), true);
    TaskSpec spec = build_spec(sc.goal_atoms, sc.domain, sc.safety_rules,
                               sc.instruction);
    PolicyCode base = parse_policy(
        "open(top_drawer)\npick_die(item_4, table)\ntake_out(top_drawer)\n"
        "store_die(item_4, top_drawer)");
    Rng rng(0xF0552);
    for (int i = 0; i < 1000; ++i) {
      PolicyCode mutated = testing::mutate_policy(base, names, rng);
      if (rng.coin()) mutated = testing::mutate_policy(mutated, names, rng);
      VerifyResult mine = verify(spec, mutated, sc.domain, sc.objects, obs);
      testing::OracleVerdict oracle = testing::first_violation_oracle(
          spec, mutated, sc.domain, sc.objects, obs);
      c.require(is_verified(mine) == oracle.verified,
                "verdict mismatch in round " + std::to_string(i));
      if (!is_verified(mine) && oracle.first_violation_index) {
        c.require(
            std::get<VerificationFeedback>(mine).violations.front().call_index ==
                *oracle.first_violation_index,
            "index mismatch in round " + std::to_string(i));
      }
    }
  }

  // 7. Confidence algebra.
  {
    Criterion c(7, "confidence algebra and normalization");
    Rng rng(0xC0FFEE);
    StubCscBackend stub;
    for (int i = 0; i < 500; ++i) {
      double csc = static_cast<double>(rng.below(10001)) / 10000.0;
      c.require(nesyconf(csc, 0) == 0.0, "lc=0 must annihilate");
      c.require(nesyconf(csc, 1) == csc, "lc=1 must be the identity");
    }
    for (int i = 0; i < 200; ++i) {
      ScoringContext ctx;
      std::size_t n = rng.below(5);
      std::vector<Demonstration> local;
      for (std::size_t k = 0; k < n; ++k) {
        Demonstration d;
        d.skill_name = "s";
        d.action.name = "s";
        d.success = rng.coin();
        local.push_back(d);
      }
      for (auto& d : local) {
        ctx.demos.push_back({&d, static_cast<double>(rng.below(101)) / 100.0});
      }
      CscScore s = stub.score(ctx);
      c.require(s.csc >= 0.0 && s.csc <= 1.0, "stub csc out of range");
      c.require(std::abs(std::exp(-s.raw) - s.csc) < 1e-12,
                "stub raw/csc mismatch");

      Demonstration good;
      good.skill_name = "s";
      good.action.name = "s";
      good.success = true;
      ScoringContext more = ctx;
      more.demos.push_back({&good, 0.5});
      c.require(stub.score(more).csc >= s.csc - 1e-12,
                "adding a successful demo lowered csc");
    }

    // The llm path through a canned transport.
    class Canned : public LlmTransport {
     public:
      std::string post(const std::string&) override {
        return R"x({"choices":[{"text":"t","logprobs":{"token_logprobs":[-0.3,-0.9,-1.2]}}]})x";
      }
    };
    LlmCscBackend llm(LlmConfig{}, std::make_shared<Canned>());
    ScoringContext ctx;
    CscScore s = llm.score(ctx);
    double raw = (0.3 + 0.9 + 1.2) / 3.0;
    c.require(std::abs(s.raw - raw) < 1e-12, "llm raw mismatch");
    c.require(std::abs(std::exp(-s.raw) - s.csc) < 1e-12, "llm exp(-raw) != csc");
    c.require(s.csc >= 0.0 && s.csc <= 1.0, "llm csc out of range");
  }

  // 8. Calibration: interpolated lower quartile, permutation invariant.
  {
    Criterion c(8, "threshold calibration lower quartile");
    std::vector<CalibrationSample> samples = {{0.2, true, true},
                                              {0.4, true, true},
                                              {0.6, true, true},
                                              {0.8, true, true}};
    c.require(std::abs(calibrate_epsilon(samples) - 0.35) < 1e-12,
              "quartile of [0.2 0.4 0.6 0.8] != 0.35");
    Rng rng(0xCA11);
    for (int round = 0; round < 50; ++round) {
      rng.shuffle(samples);
      c.require(std::abs(calibrate_epsilon(samples) - 0.35) < 1e-12,
                "permutation changed the threshold");
    }
  }

  // 9 and 10 share one suite run: determinism of the report bytes, then the
  // per-episode generator-invocation bound.
  {
    SuiteConfig config;
    for (const auto& name :
         {"object_relocation.json", "object_interaction.json",
          "aux_dark_room.json", "aux_room_lit.json", "long_horizon.json",
          "long_horizon_simple.json"}) {
      config.scenario_paths.push_back(kScenarioDir + name);
    }
    config.levels = {ObservabilityLevel::High, ObservabilityLevel::Low,
                     ObservabilityLevel::Stochastic,
                     ObservabilityLevel::Complete};
    config.trials = 3;
    config.mode = Mode::Nesyro;
    config.engine.mode = Mode::Nesyro;

    SuiteReport first = run_suite(config);
    {
      Criterion c(9, "byte-identical reports across runs");
      SuiteReport second = run_suite(config);
      c.require(first.to_json() == second.to_json(), "reports differ");
      c.require(first.self_consistent(), "aggregates do not match records");
    }
    {
      Criterion c(10, "generator invocations stay within the bound");
      for (const auto& cell : first.cells) {
        for (const auto& episode : cell.episodes) {
          c.require(episode.bound_respected,
                    cell.scenario + "/" + cell.level + " trial " +
                        std::to_string(episode.trial) + " exceeded the bound");
          c.require(episode.gate_respected,
                    cell.scenario + "/" + cell.level + " trial " +
                        std::to_string(episode.trial) +
                        " executed an ungated call");
        }
      }
    }
  }

  if (g_failures == 0) {
    std::cout << "all criteria passed\n";
    return 0;
  }
  std::cout << g_failures << " criteria failed\n";
  return 1;
}
