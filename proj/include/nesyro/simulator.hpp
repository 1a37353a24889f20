#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nesyro/atoms.hpp"
#include "nesyro/confidence.hpp"
#include "nesyro/domain.hpp"
#include "nesyro/planner.hpp"
#include "nesyro/policy.hpp"
#include "nesyro/verifier.hpp"

namespace nesyro {

enum class ObservabilityLevel { High, Low, Stochastic, Complete };

ObservabilityLevel parse_level(const std::string& name);
std::string to_string(ObservabilityLevel level);

struct VisibilityRule {
  GroundAtom guard;                 // masks apply while this is false in truth
  std::set<std::string> masked_predicates;
};

struct Scenario {
  std::string name;
  Domain domain;
  ObjectTable objects;
  std::set<GroundAtom> hidden_init;  // atoms true initially; the rest false
  std::vector<GroundAtom> essential_atoms;
  std::vector<VisibilityRule> visibility_rules;
  std::string instruction;
  std::vector<GroundAtom> goal_atoms;
  std::vector<SafetyRule> safety_rules;
  std::map<std::string, std::vector<SkillCall>> expansions;  // arg slots are ?vars
  std::string demo_file;  // resolved path; empty when absent
};

// Loads and validates a scenario JSON file. Resolves domain/meta/demo paths
// relative to the scenario file and checks that the goal is reachable from
// the full hidden truth. Throws std::runtime_error on any defect.
Scenario load_scenario(const std::string& path);
Scenario load_scenario_json(const std::string& json_text,
                            const std::string& base_dir);

struct StepResult {
  bool succeeded = false;
  std::vector<std::pair<GroundAtom, bool>> observation_delta;
  bool irreversible_triggered = false;
};

struct Metrics {
  double sr = 0.0;
  double gc = 0.0;
  int ia = 0;
};

// One episode's mutable world: hidden truth plus agent-side bookkeeping.
class Env {
 public:
  Env(const Scenario& scenario, ObservabilityLevel level, std::uint64_t seed);

  // Reveals the level-dependent subset of essential atoms. Returns the
  // initial observations; the instruction accompanies them.
  std::vector<std::pair<GroundAtom, bool>> reset();

  StepResult step(const GroundAction& action);

  const Scenario& scenario() const { return *scenario_; }
  bool truth(const GroundAtom& atom) const { return truth_.count(atom) > 0; }
  const std::set<GroundAtom>& truth_atoms() const { return truth_; }
  bool damaged() const { return damaged_; }
  int ia_count() const { return ia_count_; }
  int step_count() const { return step_count_; }
  ObservabilityLevel level() const { return level_; }
  std::uint64_t seed() const { return seed_; }

  // True when the goal is provably unreachable from the current truth.
  bool goal_unreachable() const;

  Metrics score() const;

 private:
  bool masked(const GroundAtom& atom) const;

  const Scenario* scenario_;
  ObservabilityLevel level_;
  std::uint64_t seed_;
  std::set<GroundAtom> truth_;
  std::set<GroundAtom> revealed_;
  bool damaged_ = false;
  int ia_count_ = 0;
  int step_count_ = 0;
};

// Skill-to-primitive expansion: the identity unless the scenario supplies an
// expansion template list for the skill.
std::vector<GroundAction> expand_skill(const SkillCall& call,
                                       const Scenario& scenario);

}  // namespace nesyro
