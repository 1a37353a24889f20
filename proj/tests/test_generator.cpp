#include "doctest.h"
#include "json.hpp"

#include "nesyro/domain_parser.hpp"
#include "nesyro/generator.hpp"
#include "nesyro/simulator.hpp"

using namespace nesyro;

#ifndef NESYRO_SOURCE_DIR
#define NESYRO_SOURCE_DIR "."
#endif

namespace {

const std::string kScenarioDir = std::string(NESYRO_SOURCE_DIR) + "/scenarios/";

GroundAtom atom(const std::string& s) { return parse_ground_atom(s); }

GenerationRequest request_for(const Scenario& sc, const ObservationStore& obs) {
  GenerationRequest req;
  req.domain = &sc.domain;
  req.objects = &sc.objects;
  req.obs = &obs;
  req.instruction = sc.instruction;
  req.goal_atoms.insert(sc.goal_atoms.begin(), sc.goal_atoms.end());
  req.safety_rules = sc.safety_rules;
  return req;
}

}  // namespace

TEST_CASE("oracle plans directly under complete knowledge") {
  Scenario sc = load_scenario(kScenarioDir + "object_interaction.json");
  Env env(sc, ObservabilityLevel::Complete, 0);
  ObservationStore obs;
  for (const auto& [a, v] : env.reset()) obs.merge(a, v);

  OracleBackend backend;
  GenerationResult result = backend.generate(request_for(sc, obs));
  REQUIRE(result.policy.calls.size() == 1);
  CHECK(result.policy.calls[0].str() == "open(top_drawer)");
  CHECK_FALSE(result.best_effort);
  CHECK(result.spec.goal_atoms == std::set<GroundAtom>{atom("(drawer_opened)")});

  // Identical requests give identical results.
  GenerationResult again = backend.generate(request_for(sc, obs));
  CHECK(again.policy == result.policy);
}

TEST_CASE("oracle leans on unknown atoms only when nothing sound exists") {
  Scenario sc = load_scenario(kScenarioDir + "object_interaction.json");
  ObservationStore blank;  // every lock unknown
  OracleBackend backend;
  GenerationResult result = backend.generate(request_for(sc, blank));
  REQUIRE(result.policy.calls.size() == 1);
  // Lexicographically least optimistic choice.
  CHECK(result.policy.calls[0].str() == "open(bottom_drawer)");
  CHECK_FALSE(result.best_effort);
}

TEST_CASE("frozen prefixes are preserved byte for byte") {
  Scenario sc = load_scenario(kScenarioDir + "long_horizon.json");
  ObservationStore obs;
  for (const auto& a : {"(unlocked top_drawer)", "(is_die item_4)",
                        "(on item_4 table)", "(empty middle_drawer)"}) {
    obs.merge(atom(a), true);
  }
  OracleBackend backend;

  GenerationRequest req = request_for(sc, obs);
  GenerationResult first = backend.generate(req);
  REQUIRE(first.policy.calls.size() >= 3);

  GenerationRequest refine = req;
  refine.prior_policy = first.policy;
  refine.frozen_index = 2;
  GenerationResult second = backend.generate(refine);
  REQUIRE(second.policy.calls.size() >= 2);
  CHECK(second.policy.calls[0] == first.policy.calls[0]);
  CHECK(second.policy.calls[1] == first.policy.calls[1]);
  CHECK(second.policy.origin == PolicyOrigin::Refined);
  CHECK(second.policy.refined_from == 2);

  CHECK_THROWS_AS(
      [&] {
        GenerationRequest bad = req;
        bad.frozen_index = 1;  // no prior policy to freeze
        backend.generate(bad);
      }(),
      std::invalid_argument);
}

TEST_CASE("best effort marks unreachable goals") {
  Scenario sc = load_scenario(kScenarioDir + "object_interaction.json");
  ObservationStore all_locked;
  for (const auto& name : {"top_drawer", "middle_drawer", "bottom_drawer"}) {
    all_locked.merge(atom("(unlocked " + std::string(name) + ")"), false);
  }
  OracleBackend backend;
  GenerationResult result = backend.generate(request_for(sc, all_locked));
  CHECK(result.best_effort);
  CHECK(result.policy.calls.empty());
}

TEST_CASE("repair renames near-miss skills, then replans the suffix") {
  Scenario sc = load_scenario(kScenarioDir + "object_interaction.json");
  ObservationStore obs;
  obs.merge(atom("(unlocked top_drawer)"), true);
  OracleBackend backend;

  GenerationRequest req = request_for(sc, obs);
  req.prior_policy = parse_policy("opn(top_drawer)");
  VerificationFeedback fb;
  fb.violations.push_back({0, "C1", "unknown skill opn", {}});
  req.prior_feedback = fb;

  GenerationResult repaired = backend.regenerate_on_feedback(req);
  REQUIRE(repaired.policy.calls.size() == 1);
  CHECK(repaired.policy.calls[0].name == "open");

  // A C4 violation replans from its index, keeping the earlier calls.
  GenerationRequest replan = request_for(sc, obs);
  replan.prior_policy = parse_policy("open(middle_drawer)");
  VerificationFeedback fb4;
  fb4.violations.push_back({0, "C4", "cannot hold", {atom("(unlocked middle_drawer)")}});
  replan.prior_feedback = fb4;
  GenerationResult replanned = backend.regenerate_on_feedback(replan);
  REQUIRE(replanned.policy.calls.size() == 1);
  CHECK(replanned.policy.calls[0].str() == "open(top_drawer)");

  GenerationRequest empty = request_for(sc, obs);
  empty.prior_policy = parse_policy("open(top_drawer)");
  empty.prior_feedback = VerificationFeedback{};
  CHECK_THROWS_AS(backend.regenerate_on_feedback(empty), std::invalid_argument);
}

TEST_CASE("oracle output verifies on the first attempt under complete obs") {
  for (const auto& name :
       {"object_relocation.json", "object_interaction.json",
        "aux_room_lit.json", "long_horizon_simple.json"}) {
    Scenario sc = load_scenario(kScenarioDir + name);
    Env env(sc, ObservabilityLevel::Complete, 0);
    ObservationStore obs;
    for (const auto& [a, v] : env.reset()) obs.merge(a, v);
    OracleBackend backend;
    GenerationResult result = backend.generate(request_for(sc, obs));
    CHECK(is_verified(
        verify(result.spec, result.policy, sc.domain, sc.objects, obs)));
  }
}

namespace {

class ScriptedTransport : public LlmTransport {
 public:
  explicit ScriptedTransport(std::vector<std::string> bodies)
      : bodies_(std::move(bodies)) {}
  std::string post(const std::string& request) override {
    requests.push_back(request);
    if (cursor_ >= bodies_.size()) throw TransportError("script exhausted");
    return bodies_[cursor_++];
  }
  std::vector<std::string> requests;

 private:
  std::vector<std::string> bodies_;
  std::size_t cursor_ = 0;
};

std::string completion(const std::string& text) {
  nlohmann::json doc;
  doc["choices"] = nlohmann::json::array();
  doc["choices"].push_back({{"text", text}});
  return doc.dump();
}

}  // namespace

TEST_CASE("llm prompt rendering fills every slot") {
  Scenario sc = load_scenario(kScenarioDir + "object_interaction.json");
  ObservationStore obs;
  obs.merge(atom("(unlocked top_drawer)"), true);

  std::string tmpl =
      "D={domain_pddl} O={observation} G={goal} S={spec} K={skill_code} "
      "B={skeleton_code} A={available_skills} L={object_list_position} "
      "F={feedback} P={prev_code} E={exploration_knowledge} "
      "Z={frozen_code_part}";
  LlmConfig config;
  auto transport = std::make_shared<ScriptedTransport>(std::vector<std::string>{});
  LlmGeneratorBackend backend(config, transport, tmpl);

  GenerationRequest req = request_for(sc, obs);
  req.prior_policy = parse_policy("open(top_drawer)");
  req.frozen_index = 1;
  std::string prompt = backend.render_prompt(req);
  CHECK(prompt.find('{') == std::string::npos);  // every slot replaced
  CHECK(prompt.find("open a drawer") != std::string::npos);
  CHECK(prompt.find("(unlocked top_drawer)=true") != std::string::npos);
  CHECK(prompt.find("open(top_drawer)") != std::string::npos);
}

TEST_CASE("llm responses parse as dsl plus labelled spec lines") {
  Scenario sc = load_scenario(kScenarioDir + "object_interaction.json");
  ObservationStore obs;
  LlmConfig config;

  auto transport = std::make_shared<ScriptedTransport>(std::vector<std::string>{
      completion("GOAL: (drawer_opened)\nSAFETY: open requires (unlocked ?c)\n"
                 "```\ncheck_lock(middle_drawer)\nopen(top_drawer)\n```\n"
                 "done.")});
  LlmGeneratorBackend backend(config, transport, "{goal}");
  GenerationResult result = backend.generate(request_for(sc, obs));
  REQUIRE(result.policy.calls.size() == 2);
  CHECK(result.policy.calls[0].str() == "check_lock(middle_drawer)");
  CHECK(result.policy.calls[1].str() == "open(top_drawer)");
  CHECK(result.spec.goal_atoms == std::set<GroundAtom>{atom("(drawer_opened)")});
  REQUIRE(result.spec.safety_rules.size() == 1);
  CHECK(result.spec.safety_rules[0].guarded_skill == "open");

  // Unparseable output triggers a bounded retry with parse feedback.
  auto retry = std::make_shared<ScriptedTransport>(std::vector<std::string>{
      completion("open(top_drawer"), completion("open(top_drawer)")});
  LlmGeneratorBackend retrying(config, retry, "{goal}");
  GenerationResult fixed = retrying.generate(request_for(sc, obs));
  CHECK(fixed.policy.calls.size() == 1);
  CHECK(retry->requests.size() == 2);
  CHECK(retry->requests[1].find("could not be parsed") != std::string::npos);

  // A response that edits frozen calls is rejected and retried.
  GenerationRequest frozen = request_for(sc, obs);
  frozen.prior_policy = parse_policy("check_lock(middle_drawer)\nopen(top_drawer)");
  frozen.frozen_index = 1;
  auto tamper = std::make_shared<ScriptedTransport>(std::vector<std::string>{
      completion("open(top_drawer)\nopen(bottom_drawer)"),
      completion("check_lock(middle_drawer)\nopen(top_drawer)")});
  LlmGeneratorBackend strict(config, tamper, "{goal}");
  GenerationResult kept = strict.generate(frozen);
  CHECK(kept.policy.calls[0].str() == "check_lock(middle_drawer)");
}
