#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nesyro/domain_parser.hpp"
#include "nesyro/engine.hpp"
#include "nesyro/harness.hpp"
#include "nesyro/simulator.hpp"

namespace py = pybind11;
using namespace nesyro;

namespace {

py::dict metrics_dict(const RunResult& result) {
  py::dict out;
  out["sr"] = result.metrics.sr;
  out["gc"] = result.metrics.gc;
  out["ia"] = result.metrics.ia;
  out["aborted"] = result.aborted;
  out["abort_reason"] = result.abort_reason;
  std::size_t probes = 0;
  for (const auto& node : result.tree) {
    if (node.kind == NodeKind::Probe && node.status == NodeStatus::Executed) {
      ++probes;
    }
  }
  out["probe_policies"] = probes;
  out["probe_actions"] = result.trajectory.probe_action_count(result.tree);
  py::list policy;
  for (const auto& call : result.main_policy.calls) policy.append(call.str());
  out["policy"] = policy;
  out["tree_json"] = result.tree_to_json();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "neuro-symbolic verification-and-validation planning engine";

  m.def(
      "parse_domain_summary",
      [](const std::string& text) {
        Domain d = parse_domain(text);
        py::dict out;
        out["name"] = d.name;
        py::list predicates;
        for (const auto& p : d.predicates) {
          predicates.append(p.name + "/" + std::to_string(p.arity()));
        }
        out["predicates"] = predicates;
        py::list skills;
        for (const auto& s : d.skills) skills.append(s.name);
        out["skills"] = skills;
        return out;
      },
      py::arg("text"),
      "Parse a typed-STRIPS domain and return a structural summary.");

  m.def(
      "parse_policy",
      [](const std::string& text) {
        PolicyCode policy = nesyro::parse_policy(text);
        py::list out;
        for (const auto& call : policy.calls) {
          out.append(py::make_tuple(call.name, call.args, call.source_line));
        }
        return out;
      },
      py::arg("text"), "Parse policy DSL text into (name, args, line) tuples.");

  m.def(
      "plan",
      [](const std::string& scenario_path, bool from_truth) {
        Scenario sc = load_scenario(scenario_path);
        SymbolicState init;
        if (from_truth) init.true_atoms = sc.hidden_init;
        std::set<GroundAtom> goal(sc.goal_atoms.begin(), sc.goal_atoms.end());
        SearchResult res = search_plan(sc.domain, sc.objects, init, goal);
        py::list steps;
        if (res.status == SearchStatus::Found) {
          for (const auto& step : res.plan->steps) steps.append(step.str());
        }
        return steps;
      },
      py::arg("scenario_path"), py::arg("from_truth") = true,
      "Plan for a scenario goal from its full hidden truth.");

  m.def(
      "run_episode",
      [](const std::string& scenario_path, const std::string& level,
         std::uint64_t seed, const std::string& mode, double epsilon) {
        Scenario sc = load_scenario(scenario_path);
        DemoLibrary demos = sc.demo_file.empty()
                                ? DemoLibrary{}
                                : DemoLibrary::from_file(sc.demo_file);
        EngineConfig config;
        config.mode = parse_mode(mode);
        config.epsilon = epsilon;
        OracleBackend backend(config.planner_limits);
        StubCscBackend csc;
        RunResult result = nesyro::run_episode(sc, parse_level(level), seed,
                                               config, backend, csc, demos);
        return metrics_dict(result);
      },
      py::arg("scenario_path"), py::arg("level") = "high", py::arg("seed") = 0,
      py::arg("mode") = "nesyro", py::arg("epsilon") = 0.45,
      "Run one seeded episode with the deterministic backend.");

  m.def(
      "verify_policy",
      [](const std::string& scenario_path, const std::string& policy_text,
         const std::string& level, std::uint64_t seed) {
        Scenario sc = load_scenario(scenario_path);
        Env env(sc, parse_level(level), seed);
        ObservationStore obs;
        for (const auto& [atom, value] : env.reset()) obs.merge(atom, value);
        PolicyCode policy = nesyro::parse_policy(policy_text);
        TaskSpec spec = build_spec(sc.goal_atoms, sc.domain, sc.safety_rules,
                                   sc.instruction);
        VerifyResult vr = verify(spec, policy, sc.domain, sc.objects, obs);
        if (is_verified(vr)) return std::string("{\"verified\":true}");
        return std::get<VerificationFeedback>(vr).to_json();
      },
      py::arg("scenario_path"), py::arg("policy_text"),
      py::arg("level") = "complete", py::arg("seed") = 0,
      "Verify policy text against a scenario's spec; returns a JSON verdict.");

  m.def(
      "run_suite",
      [](const std::string& config_json) {
        SuiteConfig config = SuiteConfig::from_json(config_json);
        return run_suite(config).to_json();
      },
      py::arg("config_json"),
      "Run a full experiment suite from a JSON config; returns the report.");

  m.def(
      "calibrate_epsilon",
      [](const std::vector<std::tuple<double, bool, bool>>& samples) {
        std::vector<CalibrationSample> converted;
        for (const auto& [confidence, success, informative] : samples) {
          converted.push_back({confidence, success, informative});
        }
        return calibrate_epsilon(converted);
      },
      py::arg("samples"),
      "Lower-quartile threshold from (confidence, success, informative) triples.");
}
