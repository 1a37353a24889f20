#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "nesyro/atoms.hpp"
#include "nesyro/domain.hpp"
#include "nesyro/policy.hpp"

namespace nesyro {

struct SafetyRule {
  std::string guarded_skill;
  std::vector<AtomTemplate> required_atoms;

  auto operator<=>(const SafetyRule&) const = default;
};

struct TaskSpec {
  std::set<GroundAtom> goal_atoms;
  std::vector<SafetyRule> safety_rules;
  std::optional<std::set<std::string>> allowed_skills;
  std::string instruction_text;
};

// Normalizing constructor: deduplicates goal atoms and validates that each
// guarded skill exists in the domain. An empty goal set is rejected.
TaskSpec build_spec(const std::vector<GroundAtom>& goal_atoms,
                    const Domain& domain,
                    const std::vector<SafetyRule>& safety_rules,
                    const std::string& instruction_text);

struct Violation {
  std::size_t call_index = 0;
  std::string constraint;  // C1..C6
  std::string message;
  std::vector<GroundAtom> atoms;

  bool operator==(const Violation&) const = default;
};

struct VerificationFeedback {
  std::vector<Violation> violations;  // sorted by (call_index, constraint)

  std::string to_json() const;
};

struct Verified {
  // The open-world assumptions committed while chaining the policy: for each
  // Unknown atom first used by a precondition, the value it was assumed to
  // have. A witness that some consistent completion executes the policy.
  std::vector<std::pair<GroundAtom, bool>> assumptions;
};

using VerifyResult = std::variant<Verified, VerificationFeedback>;

// Static pre-execution check of a policy against a spec. Runs constraints
// C1..C6 under an optimistic symbolic execution started from the store's
// Known-True atoms: Unknown preconditions are assumed satisfiable (and the
// assumption committed), known-False ones are violations. Goal atoms must
// end established (still-Unknown goals are unmet). Total function.
//   C1 call names a domain skill          C2 arity matches
//   C3 arguments are typed scenario objects
//   C4 chained executability              C5 final state covers the goal
//   C6 guarded skills follow their safety rules
VerifyResult verify(const TaskSpec& spec, const PolicyCode& policy,
                    const Domain& domain, const ObjectTable& objects,
                    const ObservationStore& obs);

inline bool is_verified(const VerifyResult& r) {
  return std::holds_alternative<Verified>(r);
}

}  // namespace nesyro
