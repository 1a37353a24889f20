#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nesyro/domain_parser.hpp"
#include "nesyro/engine.hpp"
#include "nesyro/harness.hpp"
#include "nesyro/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitScenarioError = 2;
constexpr int kExitAbortThreshold = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neuro-symbolic verification-and-validation planning engine"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run a seeded experiment suite");
  std::vector<std::string> scenarios;
  std::vector<std::string> levels = {"high"};
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::string mode = "nesyro";
  std::string backend = "oracle";
  double epsilon = 0.45;
  std::string out_path;
  std::string format = "json";
  std::size_t jobs = 1;
  double max_abort_rate = 1.0;
  run_cmd->add_option("--scenario", scenarios, "scenario file(s)")->required();
  run_cmd->add_option("--level", levels, "observability level(s): high|low|stochastic|complete");
  run_cmd->add_option("--trials", trials, "trials per (scenario, level) cell");
  run_cmd->add_option("--seed", seed, "base seed");
  run_cmd->add_option("--mode", mode, "nesyro|naive|verify_only|no_lc|no_csc|no_probe");
  run_cmd->add_option("--backend", backend, "oracle|llm");
  run_cmd->add_option("--epsilon", epsilon, "confidence threshold");
  run_cmd->add_option("--out", out_path, "output file (stdout when absent)");
  run_cmd->add_option("--format", format, "json|table");
  run_cmd->add_option("--jobs", jobs, "parallel episodes");
  run_cmd->add_option("--max-abort-rate", max_abort_rate,
                      "exit 3 when the aborted-episode fraction exceeds this");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "verify a policy file against a scenario");
  std::string verify_scenario;
  std::string verify_policy;
  std::string verify_level = "complete";
  std::uint64_t verify_seed = 0;
  verify_cmd->add_option("--scenario", verify_scenario)->required();
  verify_cmd->add_option("--policy", verify_policy, "policy DSL file")->required();
  verify_cmd->add_option("--level", verify_level);
  verify_cmd->add_option("--seed", verify_seed);

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "plan for a scenario goal");
  std::string plan_scenario;
  bool plan_from_obs = false;
  std::string plan_level = "complete";
  std::uint64_t plan_seed = 0;
  plan_cmd->add_option("--scenario", plan_scenario)->required();
  plan_cmd->add_flag("--from-obs", plan_from_obs,
                     "plan from a seeded reset's known-true atoms instead of full truth");
  plan_cmd->add_option("--level", plan_level);
  plan_cmd->add_option("--seed", plan_seed);

  // probe
  auto* probe_cmd = app.add_subcommand(
      "probe", "show the first probe goal the validator would raise");
  std::string probe_scenario;
  std::string probe_level = "high";
  std::uint64_t probe_seed = 0;
  double probe_epsilon = 0.45;
  probe_cmd->add_option("--scenario", probe_scenario)->required();
  probe_cmd->add_option("--level", probe_level);
  probe_cmd->add_option("--seed", probe_seed);
  probe_cmd->add_option("--epsilon", probe_epsilon);

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "calibrate the confidence threshold");
  std::string cal_scenario;
  std::size_t cal_probes = 5;
  std::uint64_t cal_seed = 0;
  std::string cal_out;
  cal_cmd->add_option("--scenario", cal_scenario)->required();
  cal_cmd->add_option("--probes", cal_probes, "probes per skill");
  cal_cmd->add_option("--seed", cal_seed);
  cal_cmd->add_option("--out", cal_out, "write {\"epsilon\": ...} here");

  // report
  auto* report_cmd = app.add_subcommand("report", "re-render a report file");
  std::string report_in;
  std::string report_format = "table";
  std::string report_out;
  report_cmd->add_option("--in", report_in, "report JSON file")->required();
  report_cmd->add_option("--format", report_format, "json|table");
  report_cmd->add_option("--out", report_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*run_cmd) {
      nesyro::SuiteConfig config;
      config.scenario_paths = scenarios;
      for (const auto& l : levels) config.levels.push_back(nesyro::parse_level(l));
      config.trials = trials;
      config.base_seed = seed;
      config.mode = nesyro::parse_mode(mode);
      config.backend = backend;
      config.engine.epsilon = epsilon;
      config.engine.mode = config.mode;
      config.jobs = jobs;

      nesyro::SuiteReport report = nesyro::run_suite(config);
      emit(format == "table" ? report.to_table() : report.to_json(), out_path);

      std::size_t episodes = 0;
      std::size_t aborts = 0;
      for (const auto& cell : report.cells) {
        episodes += cell.episodes.size();
        aborts += cell.aborts;
      }
      if (episodes > 0 &&
          static_cast<double>(aborts) / static_cast<double>(episodes) >
              max_abort_rate) {
        std::cerr << "abort rate exceeded threshold\n";
        return kExitAbortThreshold;
      }
      return kExitOk;
    }

    if (*verify_cmd) {
      nesyro::Scenario sc = nesyro::load_scenario(verify_scenario);
      nesyro::Env env(sc, nesyro::parse_level(verify_level), verify_seed);
      nesyro::ObservationStore obs;
      for (const auto& [atom, value] : env.reset()) obs.merge(atom, value);
      nesyro::PolicyCode policy = nesyro::parse_policy(slurp(verify_policy));
      nesyro::TaskSpec spec = nesyro::build_spec(
          sc.goal_atoms, sc.domain, sc.safety_rules, sc.instruction);
      nesyro::VerifyResult vr =
          nesyro::verify(spec, policy, sc.domain, sc.objects, obs);
      if (nesyro::is_verified(vr)) {
        std::cout << "{\"verified\":true}\n";
      } else {
        std::cout << std::get<nesyro::VerificationFeedback>(vr).to_json() << '\n';
      }
      return kExitOk;
    }

    if (*plan_cmd) {
      nesyro::Scenario sc = nesyro::load_scenario(plan_scenario);
      nesyro::SymbolicState init;
      if (plan_from_obs) {
        nesyro::Env env(sc, nesyro::parse_level(plan_level), plan_seed);
        for (const auto& [atom, value] : env.reset()) {
          if (value) init.true_atoms.insert(atom);
        }
      } else {
        init.true_atoms = sc.hidden_init;
      }
      std::set<nesyro::GroundAtom> goal(sc.goal_atoms.begin(), sc.goal_atoms.end());
      nesyro::SearchResult res =
          nesyro::search_plan(sc.domain, sc.objects, init, goal);
      if (res.status != nesyro::SearchStatus::Found) {
        std::cout << (res.status == nesyro::SearchStatus::Unsolvable
                          ? "unsolvable\n"
                          : "limit exceeded\n");
        return kExitOk;
      }
      for (const auto& step : res.plan->steps) std::cout << step.str() << '\n';
      return kExitOk;
    }

    if (*probe_cmd) {
      nesyro::Scenario sc = nesyro::load_scenario(probe_scenario);
      nesyro::Env env(sc, nesyro::parse_level(probe_level), probe_seed);
      nesyro::ObservationStore obs;
      for (const auto& [atom, value] : env.reset()) obs.merge(atom, value);
      nesyro::DemoLibrary demos = sc.demo_file.empty()
                                      ? nesyro::DemoLibrary{}
                                      : nesyro::DemoLibrary::from_file(sc.demo_file);
      nesyro::OracleBackend backend;
      nesyro::GenerationRequest req;
      req.domain = &sc.domain;
      req.objects = &sc.objects;
      req.obs = &obs;
      req.instruction = sc.instruction;
      req.goal_atoms.insert(sc.goal_atoms.begin(), sc.goal_atoms.end());
      req.safety_rules = sc.safety_rules;
      nesyro::GenerationResult gen = backend.generate(req);
      nesyro::StubCscBackend stub;
      std::set<nesyro::GroundAtom> goal(sc.goal_atoms.begin(), sc.goal_atoms.end());
      for (std::size_t n = 0; n < gen.policy.calls.size(); ++n) {
        std::vector<nesyro::SkillCall> prefix(gen.policy.calls.begin(),
                                              gen.policy.calls.begin() +
                                                  static_cast<long>(n));
        nesyro::LogicVerdict lc = nesyro::logic_confidence(
            sc.domain, sc.objects, obs, goal, prefix, gen.policy.calls[n]);
        nesyro::ScoringContext ctx;
        ctx.domain = &sc.domain;
        ctx.objects = &sc.objects;
        ctx.obs = &obs;
        ctx.instruction = sc.instruction;
        ctx.call = gen.policy.calls[n];
        ctx.demos = nesyro::retrieve_demos(demos, ctx.call, obs);
        ctx.skill_snippet = ctx.call.str();
        double csc = stub.score(ctx).csc;
        double conf = nesyro::nesyconf(csc, lc.lc);
        if (conf >= probe_epsilon) continue;
        std::optional<nesyro::CscFeedback> csc_fb;
        if (csc < probe_epsilon) {
          csc_fb = nesyro::make_csc_feedback(ctx, csc, probe_epsilon);
        }
        nesyro::ProbeGoalResult pg = nesyro::make_probe_goal(
            gen.policy.calls[n], n, lc, csc_fb, obs, sc.domain);
        if (std::holds_alternative<nesyro::ProbeGoal>(pg)) {
          std::cout << std::get<nesyro::ProbeGoal>(pg).to_json() << '\n';
        } else {
          std::cout << "{\"no_probe_possible\":true}\n";
        }
        return kExitOk;
      }
      std::cout << "{\"grounded\":true}\n";
      return kExitOk;
    }

    if (*cal_cmd) {
      nesyro::Scenario sc = nesyro::load_scenario(cal_scenario);
      nesyro::DemoLibrary demos = sc.demo_file.empty()
                                      ? nesyro::DemoLibrary{}
                                      : nesyro::DemoLibrary::from_file(sc.demo_file);
      nesyro::EngineConfig engine;
      nesyro::CalibrationRun run =
          nesyro::calibrate(sc, engine, demos, cal_probes, cal_seed);
      std::ostringstream out;
      out << "{\"epsilon\": " << run.epsilon
          << ", \"samples\": " << run.samples.size() << "}\n";
      emit(out.str(), cal_out);
      if (!cal_out.empty()) std::cout << "epsilon " << run.epsilon << '\n';
      return kExitOk;
    }

    if (*report_cmd) {
      nesyro::SuiteReport report = nesyro::report_from_json(slurp(report_in));
      if (!report.self_consistent()) {
        std::cerr << "report aggregates do not match episode records\n";
        return kExitConfigError;
      }
      emit(report_format == "json" ? report.to_json() : report.to_table(),
           report_out);
      return kExitOk;
    }
  } catch (const nesyro::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitScenarioError;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::string msg = e.what();
    if (msg.find("scenario") != std::string::npos ||
        msg.find("cannot open") != std::string::npos ||
        msg.find("unreachable goal") != std::string::npos) {
      return kExitScenarioError;
    }
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}
